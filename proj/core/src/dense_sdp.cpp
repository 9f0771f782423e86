#include "doaloc/dense_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "doaloc/error.hpp"

namespace doaloc::sdp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kSqrt2 = 1.4142135623730951;

VectorXd svec(const MatrixXd& m) {
  const Index n = m.rows();
  VectorXd v(n * (n + 1) / 2);
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    v(p++) = m(j, j);
    for (Index i = j + 1; i < n; ++i) v(p++) = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

MatrixXd smat(const VectorXd& v, Index n) {
  MatrixXd m(n, n);
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    m(j, j) = v(p++);
    for (Index i = j + 1; i < n; ++i) {
      m(i, j) = m(j, i) = v(p++) / kSqrt2;
    }
  }
  return m;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// <A, Z> for symmetric A and arbitrary Z.
double inner(const MatrixXd& a, const MatrixXd& z) { return a.cwiseProduct(z).sum(); }

// Largest alpha with M + alpha dM PSD, given the Cholesky factor L of M.
double max_step(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& dm) {
  const auto l = chol.matrixL();
  MatrixXd t = l.solve(dm);
  t = l.solve(t.transpose().eval()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

struct Reduced {
  std::vector<MatrixXd> a;
  VectorXd b;
  bool consistent = true;
};

// Replaces the constraint family by an orthonormal basis of its span (in
// svec coordinates), mapping the right-hand side accordingly.
Reduced reduce_constraints(const Problem& p) {
  const Index n = p.c.rows();
  const Index m = static_cast<Index>(p.a.size());
  const Index nn = n * (n + 1) / 2;
  MatrixXd amat(m, nn);
  for (Index i = 0; i < m; ++i) amat.row(i) = svec(p.a[static_cast<std::size_t>(i)]).transpose();

  Eigen::JacobiSVD<MatrixXd> svd(amat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double tol = 1e-10 * (s.size() > 0 ? s(0) : 0.0) * static_cast<double>(std::max(m, nn));
  const Index r = (s.array() > tol).count();

  Reduced out;
  const MatrixXd ur = svd.matrixU().leftCols(r);
  VectorXd coeff = ur.transpose() * p.b;
  const VectorXd leftover = p.b - ur * coeff;
  out.consistent = leftover.norm() <= 1e-9 * (1.0 + p.b.norm());
  out.b = coeff.cwiseQuotient(s.head(r));
  for (Index i = 0; i < r; ++i) out.a.push_back(smat(svd.matrixV().col(i), n));
  return out;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kMaxIterations: return "iteration limit reached";
    case Status::kStalled: return "stalled";
    case Status::kPrimalInfeasible: return "primal infeasible";
    case Status::kNumericalError: return "numerical error";
  }
  return "unknown";
}

Result solve(const Problem& problem, const Options& options) {
  const Index n = problem.c.rows();
  if (n == 0 || problem.c.cols() != n || problem.b.size() != static_cast<Index>(problem.a.size())) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent SDP dimensions");
  }
  for (const auto& a : problem.a) {
    if (a.rows() != n || a.cols() != n) {
      throw Error(ErrorCode::kInvalidArgument, "constraint matrix has wrong size");
    }
  }

  Result res;
  Reduced red = reduce_constraints(problem);
  res.independent_constraints = static_cast<int>(red.a.size());
  if (!red.consistent) {
    res.status = Status::kPrimalInfeasible;
    return res;
  }
  const auto m = static_cast<Index>(red.a.size());
  const std::vector<MatrixXd>& a = red.a;
  const VectorXd& b = red.b;

  // Work with a unit-norm cost; objectives are reported unscaled.
  const double c_norm = problem.c.norm();
  const double c_scale = c_norm > 0.0 ? c_norm : 1.0;
  const MatrixXd c = sym(problem.c) / c_scale;

  auto op_a = [&](const MatrixXd& z) {
    VectorXd v(m);
    for (Index i = 0; i < m; ++i) v(i) = inner(a[static_cast<std::size_t>(i)], z);
    return v;
  };
  auto op_at = [&](const VectorXd& y) {
    MatrixXd z = MatrixXd::Zero(n, n);
    for (Index i = 0; i < m; ++i) z += y(i) * a[static_cast<std::size_t>(i)];
    return z;
  };

  const double dn = static_cast<double>(n);
  const double xi = std::max({10.0, std::sqrt(dn), dn * (1.0 + b.cwiseAbs().maxCoeff())});
  const double eta = std::max({10.0, std::sqrt(dn), 1.0 + c.norm()});
  MatrixXd x = xi * MatrixXd::Identity(n, n);
  MatrixXd s = eta * MatrixXd::Identity(n, n);
  VectorXd y = VectorXd::Zero(m);

  const double b_norm = b.norm();
  double prev_alpha = 1.0;
  int small_steps = 0;

  auto evaluate = [&]() {
    const VectorXd rp = b - op_a(x);
    const MatrixXd rd = c - op_at(y) - s;
    const double pobj = inner(c, x);
    const double dobj = b.dot(y);
    res.primal_residual = rp.norm() / (1.0 + b_norm);
    res.dual_residual = rd.norm() / (1.0 + c.norm());
    res.relative_gap = inner(x, s) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.primal_objective = pobj * c_scale;
    res.dual_objective = dobj * c_scale;
    return std::pair{rp, rd};
  };

  for (int iter = 0;; ++iter) {
    res.iterations = iter;
    const auto residuals = evaluate();
    const VectorXd& rp = residuals.first;
    const MatrixXd& rd = residuals.second;
    if (!std::isfinite(res.primal_residual + res.dual_residual + res.relative_gap)) {
      res.status = Status::kNumericalError;
      break;
    }
    if (res.primal_residual < options.feasibility_tol &&
        res.dual_residual < options.feasibility_tol && res.relative_gap < options.gap_tol) {
      res.status = Status::kOptimal;
      break;
    }
    if (iter >= options.max_iterations) {
      res.status = Status::kMaxIterations;
      break;
    }

    Eigen::LLT<MatrixXd> chol_x(x);
    Eigen::LLT<MatrixXd> chol_s(s);
    if (chol_x.info() != Eigen::Success || chol_s.info() != Eigen::Success) {
      res.status = Status::kNumericalError;
      break;
    }
    const MatrixXd s_inv = chol_s.solve(MatrixXd::Identity(n, n));
    const double mu = inner(x, s) / dn;

    // Schur complement M_ij = tr(A_i X A_j S^-1).
    MatrixXd schur(m, m);
    std::vector<MatrixXd> g(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) g[static_cast<std::size_t>(j)] = x * a[static_cast<std::size_t>(j)] * s_inv;
    for (Index i = 0; i < m; ++i) {
      for (Index j = i; j < m; ++j) {
        schur(i, j) = schur(j, i) =
            inner(a[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)].transpose());
      }
    }
    Eigen::LDLT<MatrixXd> schur_f(schur);
    if (schur_f.info() != Eigen::Success) {
      res.status = Status::kNumericalError;
      break;
    }

    const MatrixXd x_rd_sinv = x * rd * s_inv;
    auto direction = [&](const MatrixXd& rc, MatrixXd& dx, VectorXd& dy, MatrixXd& ds) {
      const MatrixXd rc_sinv = rc * s_inv;
      dy = schur_f.solve(rp - op_a(rc_sinv - x_rd_sinv));
      ds = sym(rd - op_at(dy));
      dx = sym((rc - x * ds) * s_inv);
    };

    // Predictor (affine scaling).
    MatrixXd dx, ds;
    VectorXd dy;
    const MatrixXd xs = x * s;
    direction(-xs, dx, dy, ds);
    const double ap = std::min(1.0, max_step(chol_x, dx));
    const double ad = std::min(1.0, max_step(chol_s, ds));
    const double gap_aff = inner(x + ap * dx, s + ad * ds);
    const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::min(1.0, std::pow(std::max(gap_aff, 0.0) / inner(x, s), expon));

    // Corrector.
    const MatrixXd rc = sigma * mu * MatrixXd::Identity(n, n) - xs - dx * ds;
    direction(rc, dx, dy, ds);
    if (!dx.allFinite() || !dy.allFinite() || !ds.allFinite()) {
      res.status = Status::kNumericalError;
      break;
    }
    const double gamma = 0.9 + 0.09 * prev_alpha;
    const double alpha_p = std::min(1.0, gamma * max_step(chol_x, dx));
    const double alpha_d = std::min(1.0, gamma * max_step(chol_s, ds));
    x = sym(x + alpha_p * dx);
    y += alpha_d * dy;
    s = sym(s + alpha_d * ds);
    prev_alpha = std::min(alpha_p, alpha_d);

    small_steps = prev_alpha < 1e-8 ? small_steps + 1 : 0;
    if (small_steps >= 3) {
      res.iterations = iter + 1;
      evaluate();
      res.status = Status::kStalled;
      break;
    }
  }

  res.x = x;
  res.s = s * c_scale;
  res.y = y * c_scale;
  // Report primal feasibility against the caller's original constraints.
  {
    VectorXd rp(static_cast<Index>(problem.a.size()));
    for (std::size_t i = 0; i < problem.a.size(); ++i) {
      rp(static_cast<Index>(i)) = problem.b(static_cast<Index>(i)) - inner(problem.a[i], x);
    }
    res.primal_residual = std::max(res.primal_residual, rp.norm() / (1.0 + problem.b.norm()));
  }
  return res;
}

}  // namespace doaloc::sdp
