#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "doaloc/frames.hpp"
#include "doaloc/linear_system.hpp"
#include "doaloc/measurement.hpp"
#include "doaloc/sdp_relaxation.hpp"

namespace doaloc {

enum class Method { kSdpO, kLsO, kSdpORefined };

/// "SDP_O", "LS_O", "SDP_O_REFINED".
const char* to_string(Method m);
/// Accepts the canonical names case-insensitively. Throws kConfig otherwise.
Method method_from_string(const std::string& s);

struct RefineOptions {
  int max_iterations = 500;
  /// Stop when the gradient norm falls below this value.
  double gradient_tol = 1e-10;
  double azimuth_weight = 1.0;
  double elevation_weight = 1.0;
  /// Armijo sufficient-decrease constant.
  double armijo = 1e-4;
};

struct EstimatorOptions {
  SolverOptions solver;
  double rank_tol = kDefaultRankTolerance;
  RefineOptions refine;
};

struct Diagnostics {
  double objective = 0.0;
  double rank1_ratio = 0.0;
  double interior_rank1_ratio = 0.0;
  int rank = 0;
  double condition_number = 0.0;
  int solver_iterations = 0;
  bool polished = false;
  bool non_unique_rotation = false;
  double scale = 1.0;
  std::vector<int> weak_rows;
};

struct RefinementTrace {
  /// Cost at the initial point followed by the cost after each accepted step.
  std::vector<double> cost;
  int iterations = 0;
  bool converged = false;
};

struct EstimateReport {
  Method method = Method::kSdpO;
  Rotation3 r_bar;
  Vec3 t_bar = Vec3::Zero();
  /// Unprojected estimate (rotation block before Procrustes).
  UnknownVector psi_hat = UnknownVector::Zero();
  /// Present only when ground truth was supplied to score().
  std::optional<double> rotation_error;
  std::optional<double> position_error;
  /// R^T (P_B^B(k) - T) for each measurement.
  std::vector<Vec3> reconstructed_b_global;
  Diagnostics diagnostics;
  std::optional<RefinementTrace> refinement;
};

/// assemble -> build_problem -> solve_relaxed -> extract_rank1 -> nearest_rotation.
/// Needs K >= 4 and rank(A) = min(2K, 12).
EstimateReport estimate_sdp_o(const MeasurementSet& ms, const EstimatorOptions& opts = {});

/// Unconstrained least squares followed by nearest_rotation. Needs K >= 6
/// and full column rank.
EstimateReport estimate_ls_o(const MeasurementSet& ms, const EstimatorOptions& opts = {});

/// Gradient descent with backtracking line search on the bearing residuals,
/// starting from `initial`. Never returns a higher cost than the start.
EstimateReport refine_mle(const MeasurementSet& ms, const EstimateReport& initial,
                          const EstimatorOptions& opts = {});

EstimateReport estimate(Method method, const MeasurementSet& ms, const EstimatorOptions& opts = {});

double rotation_error(const Rotation3& r_est, const Rotation3& r_true);

/// Mean distance between estimated and true global positions of B.
double position_error(const MeasurementSet& ms, const Rotation3& r_est, const Vec3& t_est,
                      const FrameTransform& truth);

std::vector<Vec3> reconstruct_b_global(const MeasurementSet& ms, const Rotation3& r, const Vec3& t);

/// Fills rotation_error and position_error from ground truth.
EstimateReport score(EstimateReport report, const MeasurementSet& ms, const FrameTransform& truth);

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Sum of squared bearing residuals as a function of a 6-DOF perturbation
/// x = (omega, delta) of a base transform:
///   R(x) = exp(omega) R_base,  T(x) = T_base + unit * delta.
/// Azimuth residuals are wrapped into (-pi, pi].
class BearingObjective {
 public:
  BearingObjective(const MeasurementSet& ms, FrameTransform base, double translation_unit,
                   double azimuth_weight = 1.0, double elevation_weight = 1.0);

  FrameTransform transform_at(const Vec6& x) const;
  double value(const Vec6& x) const;
  double value_and_gradient(const Vec6& x, Vec6& gradient) const;

 private:
  MeasurementSet ms_;
  FrameTransform base_;
  double unit_;
  double w_az_;
  double w_el_;
};

}  // namespace doaloc
