#include "doaloc/sdp_relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "doaloc/error.hpp"
#include "doaloc/procrustes.hpp"

namespace doaloc {

namespace {

constexpr int kHom = 12;  // index of the homogenising entry

// Index of r_ij (0-based) inside psi.
constexpr int r(int i, int j) { return 3 * ((i + 3) % 3) + (j + 3) % 3; }

// Accumulates polynomial terms into Q such that <Q, X(psi)> reproduces them.
class PolyBuilder {
 public:
  explicit PolyBuilder(int id) { c_.id = id; }

  PolyBuilder& quad(int i, int j, double coeff) {
    if (i == j) {
      c_.q(i, i) += coeff;
    } else {
      c_.q(i, j) += 0.5 * coeff;
      c_.q(j, i) += 0.5 * coeff;
    }
    return *this;
  }
  // X(j, 13) = -psi_j at rank one.
  PolyBuilder& lin(int j, double coeff) {
    c_.q(j, kHom) -= 0.5 * coeff;
    c_.q(kHom, j) -= 0.5 * coeff;
    return *this;
  }
  PolyBuilder& constant(double coeff) {
    c_.q(kHom, kHom) += coeff;
    return *this;
  }
  ConstraintMatrix done() const { return c_; }

 private:
  ConstraintMatrix c_;
};

using Factor = Eigen::Matrix<double, Eigen::Dynamic, 13>;

Factor factor_of(const SdpProblem& problem) {
  if (problem.factor.rows() > 0) return problem.factor;
  Eigen::SelfAdjointEigenSolver<Mat13> es(problem.p);
  const Eigen::Matrix<double, 13, 1> root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return root.asDiagonal() * es.eigenvectors().transpose();
}

struct Polished {
  UnknownVector psi = UnknownVector::Zero();  // translation in scaled units
  double objective = 0.0;
};

// Gauss-Newton on ||A psi(R, t) - b||^2 with R kept on SO(3) through a left
// multiplicative update R <- exp(dw) R.
std::optional<Polished> polish_rank1(const Factor& f, const UnknownVector& start) {
  const auto a_rot = f.leftCols<9>();
  const auto a_t = f.middleCols<3>(9);
  const auto b = f.col(12);

  Rotation3 r;
  try {
    r = nearest_rotation(rotation_block(start));
  } catch (const Error&) {
    return std::nullopt;
  }
  Vec3 t = translation_block(start);

  auto residual = [&](const Rotation3& rot, const Vec3& tr) {
    return Eigen::VectorXd(f.leftCols<12>() * pack_unknowns(rot.matrix(), tr) - b);
  };
  Eigen::VectorXd res = residual(r, t);
  double cost = res.squaredNorm();

  Eigen::MatrixXd jac(f.rows(), 6);
  for (int iter = 0; iter < 50; ++iter) {
    for (int k = 0; k < 3; ++k) {
      const Mat3 dr = hat(Vec3::Unit(k)) * r.matrix();
      Eigen::Matrix<double, 9, 1> flat;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) flat(3 * i + j) = dr(i, j);
      }
      jac.col(k) = a_rot * flat;
    }
    jac.rightCols<3>() = a_t;
    const Eigen::Matrix<double, 6, 1> step = jac.colPivHouseholderQr().solve(-res);
    if (!step.allFinite()) break;

    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const Rotation3 r_new = Rotation3::exp(alpha * step.head<3>()) * r;
      const Vec3 t_new = t + alpha * step.tail<3>();
      Eigen::VectorXd res_new = residual(r_new, t_new);
      const double c_new = res_new.squaredNorm();
      if (c_new < cost) {
        r = r_new;
        t = t_new;
        res = std::move(res_new);
        cost = c_new;
        improved = true;
        break;
      }
    }
    if (!improved || alpha * step.norm() < 1e-15 * (1.0 + t.norm())) break;
  }
  return Polished{pack_unknowns(r.matrix(), t), cost};
}

double rank1_ratio_of(const Mat13& x) {
  Eigen::SelfAdjointEigenSolver<Mat13> es(x, Eigen::EigenvaluesOnly);
  Eigen::Matrix<double, 13, 1> sv = es.eigenvalues().cwiseAbs();
  std::sort(sv.data(), sv.data() + 13, std::greater<>());
  return sv(0) > 0.0 ? std::clamp(sv(1) / sv(0), 0.0, 1.0) : 1.0;
}

}  // namespace

Mat13 lift(const UnknownVector& psi) {
  Vec13 v;
  v.head<12>() = psi;
  v(kHom) = -1.0;
  return v * v.transpose();
}

double frobenius_inner(const Mat13& u, const Mat13& v) { return u.cwiseProduct(v).sum(); }

std::vector<ConstraintMatrix> build_constraints() {
  std::vector<ConstraintMatrix> out;
  out.reserve(kConstraintCount);
  int id = 1;

  // R R^T = I: row norms, then row pairs (1,2), (1,3), (2,3).
  for (int i = 0; i < 3; ++i) {
    PolyBuilder pb(id++);
    for (int k = 0; k < 3; ++k) pb.quad(r(i, k), r(i, k), 1.0);
    out.push_back(pb.constant(-1.0).done());
  }
  for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
    PolyBuilder pb(id++);
    for (int k = 0; k < 3; ++k) pb.quad(r(i, k), r(j, k), 1.0);
    out.push_back(pb.done());
  }
  // R^T R = I: column norms, then column pairs.
  for (int j = 0; j < 3; ++j) {
    PolyBuilder pb(id++);
    for (int k = 0; k < 3; ++k) pb.quad(r(k, j), r(k, j), 1.0);
    out.push_back(pb.constant(-1.0).done());
  }
  for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
    PolyBuilder pb(id++);
    for (int k = 0; k < 3; ++k) pb.quad(r(k, i), r(k, j), 1.0);
    out.push_back(pb.done());
  }
  // Z = R - adj(R)^T = 0, column by column. adj(R)^T is the cofactor matrix:
  // cof_ij = r(i+1,j+1) r(i+2,j+2) - r(i+1,j+2) r(i+2,j+1), indices mod 3.
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      PolyBuilder pb(id++);
      pb.lin(r(i, j), 1.0);
      pb.quad(r(i + 1, j + 1), r(i + 2, j + 2), -1.0);
      pb.quad(r(i + 1, j + 2), r(i + 2, j + 1), 1.0);
      out.push_back(pb.done());
    }
  }
  return out;
}

Eigen::Matrix<double, kConstraintCount, 1> constraint_residuals(const UnknownVector& psi) {
  static const std::vector<ConstraintMatrix> constraints = build_constraints();
  const Mat13 x = lift(psi);
  Eigen::Matrix<double, kConstraintCount, 1> out;
  for (int i = 0; i < kConstraintCount; ++i) {
    out(i) = frobenius_inner(constraints[static_cast<std::size_t>(i)].q, x);
  }
  return out;
}

SdpProblem build_problem(const LinearSystem& ls) {
  Eigen::Matrix<double, Eigen::Dynamic, 13> ab(ls.rows(), 13);
  ab.leftCols<12>() = ls.a;
  ab.col(12) = ls.b;
  SdpProblem p;
  p.p = ab.transpose() * ab;
  p.factor = ab;
  p.constraints = build_constraints();
  p.scale = ls.scale;
  return p;
}

SdpSolution solve_relaxed(const SdpProblem& problem, const SolverOptions& opts) {
  sdp::Problem sp;
  sp.c = problem.p;
  sp.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.constraints.size()) + 1);
  for (const auto& c : problem.constraints) sp.a.emplace_back(c.q);
  Eigen::MatrixXd hom = Eigen::MatrixXd::Zero(13, 13);
  hom(kHom, kHom) = 1.0;
  sp.a.push_back(hom);
  sp.b(sp.b.size() - 1) = 1.0;

  sdp::Options so;
  so.feasibility_tol = opts.feasibility_tol;
  so.gap_tol = opts.gap_tol;
  so.max_iterations = opts.max_iterations;
  const sdp::Result res = sdp::solve(sp, so);

  if (res.status == sdp::Status::kPrimalInfeasible) {
    throw Error(ErrorCode::kInfeasible, "infeasible: constraint system is inconsistent");
  }
  if (res.status != sdp::Status::kOptimal) {
    std::ostringstream msg;
    msg << "solver failed: " << sdp::to_string(res.status) << " after " << res.iterations
        << " iterations (primal residual " << res.primal_residual << ", dual residual "
        << res.dual_residual << ", relative gap " << res.relative_gap << ")";
    throw Error(ErrorCode::kSolverFailed, msg.str());
  }

  SdpSolution out;
  out.x = res.x;
  out.solver_iterations = res.iterations;
  out.scale = problem.scale;
  out.primal_residual = res.primal_residual;
  out.dual_residual = res.dual_residual;
  out.relative_gap = res.relative_gap;
  out.dual_bound = res.dual_objective;
  out.interior_rank1_ratio = rank1_ratio_of(out.x);

  if (opts.polish) {
    try {
      const Rank1Estimate start = extract_rank1(out.x, 1.0);
      if (const auto pol = polish_rank1(factor_of(problem), start.psi_hat)) {
        // Same normalisation as the solver's relative gap.
        const double excess = pol->objective - res.dual_objective;
        const double denom = problem.p.norm() + std::abs(pol->objective) + std::abs(res.dual_objective);
        if (excess <= opts.gap_tol * denom) {
          out.x = lift(pol->psi);
          out.polished = true;
        }
      }
    } catch (const Error&) {
      // Leave the interior-point iterate in place.
    }
  }

  out.objective = std::max(0.0, frobenius_inner(problem.p, out.x));
  if (out.polished && problem.factor.rows() > 0) {
    Vec13 v;
    v.head<12>() = out.x.col(kHom).head<12>() * -1.0;
    v(kHom) = -1.0;
    out.objective = (problem.factor * v).squaredNorm();
  }
  out.rank1_ratio = out.polished ? rank1_ratio_of(out.x) : out.interior_rank1_ratio;

  Eigen::SelfAdjointEigenSolver<Mat13> es(out.x, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues()(0);
  double worst = std::abs(out.x(kHom, kHom) - 1.0);
  for (const auto& c : problem.constraints) {
    worst = std::max(worst, std::abs(frobenius_inner(c.q, out.x)));
  }
  out.max_constraint_violation = worst;
  out.psi_hat = extract_rank1(out).psi_hat;
  return out;
}

Rank1Estimate extract_rank1(const Mat13& x, double scale) {
  Eigen::SelfAdjointEigenSolver<Mat13> es(0.5 * (x + x.transpose()));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateExtraction, "degenerate extraction: eigensolver failed");
  }
  // For PSD X the eigenpair with the largest eigenvalue is the leading
  // singular pair.
  Eigen::Index lead = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&lead);
  const Vec13 u = es.eigenvectors().col(lead);
  if (std::abs(u(kHom)) < 1e-6) {
    throw Error(ErrorCode::kDegenerateExtraction,
                "degenerate extraction: leading singular vector has no homogenising component");
  }
  const Vec13 v = -u / u(kHom);

  Rank1Estimate out;
  out.psi_hat = v.head<12>();
  out.psi_hat.tail<3>() *= scale;
  out.r_hat = rotation_block(out.psi_hat);
  out.t_bar = translation_block(out.psi_hat);
  return out;
}

Rank1Estimate extract_rank1(const SdpSolution& s) { return extract_rank1(s.x, s.scale); }

}  // namespace doaloc
