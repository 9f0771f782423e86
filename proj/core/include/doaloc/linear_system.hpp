#pragma once

#include <vector>

#include <Eigen/Core>

#include "doaloc/error.hpp"
#include "doaloc/measurement.hpp"

namespace doaloc {

/// Unknowns ordered [r11 r12 r13 r21 r22 r23 r31 r32 r33 t1 t2 t3].
using UnknownVector = Eigen::Matrix<double, 12, 1>;
using RowVector12 = Eigen::Matrix<double, 1, 12>;

UnknownVector pack_unknowns(const Mat3& rotation, const Vec3& translation);
/// First nine entries reshaped row-major. No orthogonality is implied.
Mat3 rotation_block(const UnknownVector& psi);
Vec3 translation_block(const UnknownVector& psi);

/// The two linear equations contributed by one measurement: the
/// cross-multiplication of components (x, z) and (y, z) of the scaled DOA
/// identity, which eliminates the unknown range.
struct MeasurementRows {
  RowVector12 row_xz;
  double b_xz = 0.0;
  RowVector12 row_yz;
  double b_yz = 0.0;
};

MeasurementRows rows_for_measurement(const DoaMeasurement& m);

/// Stacked system A psi = b with 2K rows.
///
/// The translation columns (10..12) are multiplied by `scale`, so the
/// solution of the stored system carries t / scale in its last three entries.
struct LinearSystem {
  Eigen::Matrix<double, Eigen::Dynamic, 12> a;
  Eigen::VectorXd b;
  double scale = 1.0;
  /// Time indices whose |sin(elevation)| falls below kWeakElevation; the
  /// retained equations lose conditioning there.
  std::vector<int> weak_rows;

  Eigen::Index rows() const { return a.rows(); }
};

inline constexpr double kWeakElevation = 1e-3;
inline constexpr double kDefaultRankTolerance = 1e-10;

LinearSystem assemble(const MeasurementSet& ms, double scale = 1.0);

/// Default translation normalisation: max(1, RMS distance of B's INS
/// positions from their centroid).
double default_scale(const MeasurementSet& ms);

struct RankDiagnostics {
  int rank = 0;
  double condition_number = 0.0;
  Eigen::Matrix<double, 12, 1> singular_values = Eigen::Matrix<double, 12, 1>::Zero();
};

/// Numerical rank with threshold eps * sigma_max * max(rows, 12).
RankDiagnostics rank_diagnostics(const LinearSystem& ls, double eps = kDefaultRankTolerance);

/// Thrown when A loses full column rank.
class NongenericTrajectoryError : public Error {
 public:
  explicit NongenericTrajectoryError(RankDiagnostics diag);
  const RankDiagnostics& diagnostics() const { return diag_; }

 private:
  RankDiagnostics diag_;
};

/// Least-squares solution of A psi = b via column-pivoted Householder QR,
/// with the translation entries de-normalised. Zero residual on noiseless
/// data. Throws kInsufficientMeasurements for fewer than 12 rows and
/// NongenericTrajectoryError when rank(A) < 12.
UnknownVector solve_noiseless(const LinearSystem& ls, double eps = kDefaultRankTolerance);

}  // namespace doaloc
