#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "oracles.hpp"

#include "doaloc/error.hpp"
#include "doaloc/measurement.hpp"
#include "doaloc/sdp_relaxation.hpp"

using namespace doaloc;
constexpr double kPi = std::numbers::pi;

namespace {

Mat13 entries(std::initializer_list<std::tuple<int, int, double>> items) {
  Mat13 q = Mat13::Zero();
  for (const auto& [i, j, v] : items) q(i - 1, j - 1) = v;
  return q;
}

oracle::Psi random_psi(oracle::Sampler& s) {
  oracle::Psi p;
  for (int i = 0; i < 12; ++i) p(i) = s.uniform(-2, 2);
  return p;
}

}  // namespace

TEST_CASE("lift places psi and -1") {
  oracle::Sampler s(51);
  const oracle::Psi p = random_psi(s);
  const Mat13 x = lift(p);
  CHECK(x(12, 12) == 1.0);
  CHECK((x.topLeftCorner<12, 12>() - p * p.transpose()).norm() == 0.0);
  CHECK((x.col(12).head<12>() + p).norm() == 0.0);
  CHECK(frobenius_inner(x, Mat13::Identity()) == doctest::Approx(p.squaredNorm() + 1));
}

TEST_CASE("constraint matrices for the first row norm, first row pair and first adjugate entry") {
  const auto q = build_constraints();
  REQUIRE(q.size() == 21);
  for (int i = 0; i < 21; ++i) {
    CHECK(q[static_cast<std::size_t>(i)].id == i + 1);
    CHECK((q[static_cast<std::size_t>(i)].q - q[static_cast<std::size_t>(i)].q.transpose()).norm() == 0.0);
  }
  CHECK((q[0].q - entries({{1, 1, 1}, {2, 2, 1}, {3, 3, 1}, {13, 13, -1}})).norm() == 0.0);
  CHECK((q[3].q - entries({{1, 4, .5}, {4, 1, .5}, {2, 5, .5}, {5, 2, .5}, {3, 6, .5}, {6, 3, .5}})).norm() == 0.0);
  CHECK((q[12].q - entries({{1, 13, -.5}, {13, 1, -.5}, {5, 9, -.5}, {9, 5, -.5}, {6, 8, .5}, {8, 6, .5}})).norm() == 0.0);
}

TEST_CASE("every constraint matrix reproduces its polynomial") {
  oracle::Sampler s(52);
  const auto q = build_constraints();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const oracle::Psi p = random_psi(s);
    const Mat13 x = lift(p);
    const auto res = constraint_residuals(p);
    for (int i = 0; i < 21; ++i) {
      const double want = oracle::constraint(i + 1, p);
      worst = std::max(worst, std::abs(frobenius_inner(q[static_cast<std::size_t>(i)].q, x) - want));
      worst = std::max(worst, std::abs(res(i) - want));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("constraints vanish exactly on rotations and not on other matrices") {
  oracle::Sampler s(53);
  for (int i = 0; i < 200; ++i) {
    const oracle::Psi p = oracle::psi_of(s.rotation(), s.vec(-500, 500));
    CHECK(constraint_residuals(p).cwiseAbs().maxCoeff() < 1e-12);
  }
  Mat3 reflection = s.rotation();
  reflection.col(0) *= -1;
  CHECK(constraint_residuals(oracle::psi_of(reflection, Vec3::Zero())).cwiseAbs().maxCoeff() > 0.5);
  CHECK(constraint_residuals(oracle::psi_of(1.1 * s.rotation(), Vec3::Zero())).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("cost matrix reproduces the squared residual") {
  oracle::Sampler s(54);
  const auto sc = oracle::generic_scenario(s, 6);
  const LinearSystem ls = assemble(sc.ms, 300.0);
  const SdpProblem prob = build_problem(ls);
  CHECK((prob.p - prob.p.transpose()).norm() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Mat13>(prob.p).eigenvalues()(0) > -1e-9 * prob.p.norm());
  for (int i = 0; i < 200; ++i) {
    const oracle::Psi p = random_psi(s);
    const double direct = (ls.a * p - ls.b).squaredNorm();
    CHECK(frobenius_inner(prob.p, lift(p)) == doctest::Approx(direct).epsilon(1e-10));
  }
  oracle::Psi truth = oracle::psi_of(sc.r, sc.t);
  truth.tail<3>() /= 300.0;
  CHECK(frobenius_inner(prob.p, lift(truth)) < 1e-12 * prob.p.norm());
}

TEST_CASE("zero right-hand side leaves the last row of the cost empty") {
  LinearSystem ls;
  ls.a = Eigen::Matrix<double, Eigen::Dynamic, 12>::Random(14, 12);
  ls.b = Eigen::VectorXd::Zero(14);
  const SdpProblem prob = build_problem(ls);
  CHECK(prob.p.row(12).norm() == 0.0);
  CHECK(prob.p.col(12).norm() == 0.0);
}

TEST_CASE("noiseless relaxation is exact and rank one") {
  oracle::Sampler s(55);
  for (int i = 0; i < 10; ++i) {
    const auto sc = oracle::generic_scenario(s, 6);
    const LinearSystem ls = assemble(sc.ms, default_scale(sc.ms));
    const SdpSolution sol = solve_relaxed(build_problem(ls));
    CHECK(sol.objective < 1e-8);
    CHECK(sol.rank1_ratio < 1e-6);
    const Rank1Estimate est = extract_rank1(sol);
    const oracle::Psi truth = oracle::psi_of(sc.r, sc.t);
    CHECK((est.psi_hat.head<9>() - truth.head<9>()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((est.t_bar - sc.t).norm() < 1e-4);
    CHECK((est.r_hat * est.r_hat.transpose() - Mat3::Identity()).norm() < 1e-6);
  }
}

TEST_CASE("lifted truth is feasible and the relaxation lower-bounds every rotation") {
  oracle::Sampler s(56);
  const auto q = build_constraints();
  const auto sc = oracle::generic_scenario(s, 6);
  const MeasurementSet noisy = add_noise(sc.ms, NoiseSpec{3 * kPi / 180, 9});
  const double scale = default_scale(noisy);
  const LinearSystem ls = assemble(noisy, scale);
  const SdpProblem prob = build_problem(ls);
  oracle::Psi truth = oracle::psi_of(sc.r, sc.t);
  truth.tail<3>() /= scale;
  for (const auto& c : q) CHECK(std::abs(frobenius_inner(c.q, lift(truth))) < 1e-10);

  const SdpSolution sol = solve_relaxed(prob);
  for (int i = 0; i < 200; ++i) {
    oracle::Psi p = oracle::psi_of(s.rotation(), s.vec(-1000, 1000));
    p.tail<3>() /= scale;
    CHECK(sol.dual_bound <= (ls.a * p - ls.b).squaredNorm() + 1e-9);
    CHECK(sol.objective <= (ls.a * p - ls.b).squaredNorm() * (1 + 1e-8) + 1e-9);
  }
  CHECK(sol.objective <= frobenius_inner(prob.p, lift(truth)) * (1 + 1e-8));
}

TEST_CASE("solver output meets the feasibility contract under noise") {
  oracle::Sampler s(57);
  for (int i = 0; i < 20; ++i) {
    const auto sc = oracle::generic_scenario(s, 6);
    const MeasurementSet noisy = add_noise(sc.ms, NoiseSpec{3 * kPi / 180, static_cast<std::uint64_t>(i)});
    for (bool polish : {true, false}) {
      SolverOptions opts;
      opts.polish = polish;
      const SdpSolution sol = solve_relaxed(build_problem(assemble(noisy, default_scale(noisy))), opts);
      CHECK(sol.min_eigenvalue > -1e-6);
      CHECK(sol.max_constraint_violation < 1e-6);
      CHECK(std::abs(sol.x(12, 12) - 1.0) < 1e-6);
      CHECK(sol.rank1_ratio >= 0.0);
      CHECK(sol.rank1_ratio <= 1.0);
      CHECK(sol.objective >= -1e-12);
      CHECK(sol.interior_rank1_ratio < 0.1);
    }
  }
}

TEST_CASE("rank-one extraction inverts the lift and fixes the sign") {
  oracle::Sampler s(58);
  const oracle::Psi p = random_psi(s);
  const Rank1Estimate est = extract_rank1(lift(p), 1.0);
  CHECK((est.psi_hat - p).norm() < 1e-12 * (1 + p.norm()));

  Vec13 u;
  u << p, -1.0;
  const Mat13 neg = (-u) * (-u).transpose();
  CHECK((extract_rank1(neg, 1.0).psi_hat - p).norm() < 1e-12 * (1 + p.norm()));

  const Rank1Estimate scaled = extract_rank1(lift(p), 250.0);
  CHECK((scaled.t_bar - 250.0 * p.tail<3>()).norm() < 1e-9);
  CHECK((scaled.r_hat - rotation_block(p)).norm() < 1e-12);
}

TEST_CASE("rank-one extraction rejects a vanishing last entry") {
  Vec13 u = Vec13::Zero();
  u(0) = 1.0;
  u(12) = 1e-9;
  try {
    extract_rank1(Mat13(u * u.transpose()), 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateExtraction);
  }
}
