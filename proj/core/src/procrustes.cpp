#include "doaloc/procrustes.hpp"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "doaloc/error.hpp"

namespace doaloc {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kNonUniqueGap = 1e-8;

Eigen::JacobiSVD<Mat3> checked_svd(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorCode::kIllDefinedProjection, "ill-defined projection: non-finite input");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) < kRankTolerance * s(0)) {
    throw Error(ErrorCode::kIllDefinedProjection, "ill-defined projection: rank < 2");
  }
  return svd;
}

}  // namespace

Mat3 nearest_orthogonal(const Mat3& m) {
  const auto svd = checked_svd(m);
  return svd.matrixU() * svd.matrixV().transpose();
}

RotationProjection project_to_rotation(const Mat3& m) {
  const auto svd = checked_svd(m);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  const double d = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = u * Eigen::Vector3d(1.0, 1.0, d).asDiagonal() * v.transpose();

  RotationProjection out{Rotation3(r), false};
  const auto& s = svd.singularValues();
  out.non_unique = d < 0.0 && (s(1) - s(2)) / s(0) < kNonUniqueGap;
  return out;
}

}  // namespace doaloc
