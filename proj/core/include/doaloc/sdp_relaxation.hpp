#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "doaloc/dense_sdp.hpp"
#include "doaloc/linear_system.hpp"

namespace doaloc {

using Mat13 = Eigen::Matrix<double, 13, 13>;
using Vec13 = Eigen::Matrix<double, 13, 1>;

inline constexpr int kConstraintCount = 21;

/// X(psi) = [psi; -1][psi; -1]^T.
Mat13 lift(const UnknownVector& psi);

/// <U, V> = trace(U V^T).
double frobenius_inner(const Mat13& u, const Mat13& v);

/// Quadratic constraint C_id(psi) = 0 written as <q, X(psi)> = 0.
///
///  1..3   rows of R have unit norm         7..9   columns have unit norm
///  4..6   rows pairwise orthogonal         10..12 columns pairwise orthogonal
///  13..21 R = adj(R)^T entry-wise, column-major over Z = R - adj(R)^T
///         (13..15 first column, 16..18 second, 19..21 third).
struct ConstraintMatrix {
  int id = 0;
  Mat13 q = Mat13::Zero();
};

std::vector<ConstraintMatrix> build_constraints();

/// Constraint residuals <Q_i, X(psi)> for i = 1..21, in order. psi carries
/// the unscaled translation; only its rotation block matters.
Eigen::Matrix<double, kConstraintCount, 1> constraint_residuals(const UnknownVector& psi);

struct SdpProblem {
  /// [A b]^T [A b]; <P, X(psi_scaled)> = ||A psi_scaled - b||^2.
  Mat13 p = Mat13::Zero();
  /// The stacked rows [A b] that P was formed from. Used to polish a
  /// rank-1 solution without the precision loss of squaring A. May be empty
  /// for hand-built problems, in which case a factor of P is used instead.
  Eigen::Matrix<double, Eigen::Dynamic, 13> factor;
  std::vector<ConstraintMatrix> constraints;
  double scale = 1.0;
};

SdpProblem build_problem(const LinearSystem& ls);

struct SolverOptions {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
  /// Overrides the data-driven translation scale when set.
  std::optional<double> scale;
  /// Operational acceptance threshold on sigma2 / sigma1 of X.
  double rank1_threshold = 0.1;
  /// Try to replace the interior-point iterate by a certified rank-1 point.
  bool polish = true;
};

/// Solution of the relaxed program. X lives in the system's variables, i.e.
/// its translation rows carry t / scale.
struct SdpSolution {
  Mat13 x = Mat13::Zero();
  double objective = 0.0;
  /// Ratio of the two largest singular values of X.
  double rank1_ratio = 0.0;
  /// The same ratio for the interior-point iterate before polishing.
  double interior_rank1_ratio = 0.0;
  /// True when X was replaced by a polished rank-1 point (see solve_relaxed).
  bool polished = false;
  /// Dual objective: a lower bound on <P, X> over the feasible set.
  double dual_bound = 0.0;
  UnknownVector psi_hat = UnknownVector::Zero();
  int solver_iterations = 0;
  double scale = 1.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double relative_gap = 0.0;
  /// Worst |<Q_i, X>| and |X_13,13 - 1| at the returned point.
  double max_constraint_violation = 0.0;
  double min_eigenvalue = 0.0;
};

/// Rank-relaxed program: minimise <P, X> over X PSD, X_13,13 = 1 and
/// <Q_i, X> = 0 for all 21 constraints. Throws kSolverFailed (with the
/// residual report in the message) or kInfeasible.
///
/// The interior-point iterate pins the optimal rank-1 factor only to about
/// sqrt(gap). When `opts.polish` is set, the leading factor is refined by
/// Gauss-Newton over rotations and translations; the lifted point is exactly
/// feasible, and it replaces the iterate only if its objective lies within
/// the gap tolerance of the dual bound, i.e. it is itself an optimal
/// solution of the relaxed program to the requested tolerance.
SdpSolution solve_relaxed(const SdpProblem& problem, const SolverOptions& opts = {});

struct Rank1Estimate {
  UnknownVector psi_hat = UnknownVector::Zero();
  Mat3 r_hat = Mat3::Zero();
  Vec3 t_bar = Vec3::Zero();
};

/// Best rank-1 approximation sigma1 u1 u1^T, with the factor rescaled so
/// its 13th entry is -1. Translation de-normalised by `scale`.
/// Throws kDegenerateExtraction when |u1(13)| < 1e-6.
Rank1Estimate extract_rank1(const Mat13& x, double scale);
Rank1Estimate extract_rank1(const SdpSolution& s);

}  // namespace doaloc
