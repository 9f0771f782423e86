#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace doaloc::sdp {

/// Standard-form problem
///   minimise <C, X>  s.t.  <A_i, X> = b_i,  X PSD,
/// with dual
///   maximise b^T y   s.t.  C - sum_i y_i A_i = S,  S PSD.
/// All matrices are symmetric n x n. Linearly dependent equality constraints
/// are allowed as long as they are consistent.
struct Problem {
  Eigen::MatrixXd c;
  std::vector<Eigen::MatrixXd> a;
  Eigen::VectorXd b;
};

struct Options {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
};

enum class Status { kOptimal, kMaxIterations, kStalled, kPrimalInfeasible, kNumericalError };

const char* to_string(Status s);

struct Result {
  Status status = Status::kNumericalError;
  Eigen::MatrixXd x;
  Eigen::MatrixXd s;
  /// Dual multipliers for the independent constraint basis used internally.
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  /// ||b - A(X)|| / (1 + ||b||) on the original constraints.
  double primal_residual = 0.0;
  /// ||C - A^T y - S||_F / (1 + ||C||_F).
  double dual_residual = 0.0;
  /// <X, S> / (1 + |pobj| + |dobj|).
  double relative_gap = 0.0;
  int iterations = 0;
  /// Number of independent constraints kept after elimination.
  int independent_constraints = 0;
};

/// Infeasible-start primal-dual path-following method with the HKM search
/// direction and Mehrotra predictor-corrector steps. Dense, intended for
/// n and m in the tens.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace doaloc::sdp
