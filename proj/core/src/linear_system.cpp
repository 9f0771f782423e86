#include "doaloc/linear_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "doaloc/error.hpp"

namespace doaloc {

UnknownVector pack_unknowns(const Mat3& rotation, const Vec3& translation) {
  UnknownVector psi;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) psi(3 * i + j) = rotation(i, j);
  }
  psi.tail<3>() = translation;
  return psi;
}

Mat3 rotation_block(const UnknownVector& psi) {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = psi(3 * i + j);
  }
  return r;
}

Vec3 translation_block(const UnknownVector& psi) { return psi.tail<3>(); }

MeasurementRows rows_for_measurement(const DoaMeasurement& m) {
  const double se = std::sin(m.doa.elevation);
  const double ce = std::cos(m.doa.elevation);
  const double cx = std::cos(m.doa.azimuth) * ce;
  const double cy = std::sin(m.doa.azimuth) * ce;
  const Vec3& pa = m.pos_a_global;
  const Vec3& pb = m.pos_b_ins;

  MeasurementRows out;
  out.row_xz.setZero();
  out.row_xz.segment<3>(0) = se * pa.transpose();
  out.row_xz.segment<3>(6) = -cx * pa.transpose();
  out.row_xz(9) = se;
  out.row_xz(11) = -cx;
  out.b_xz = se * pb.x() - cx * pb.z();

  out.row_yz.setZero();
  out.row_yz.segment<3>(3) = se * pa.transpose();
  out.row_yz.segment<3>(6) = -cy * pa.transpose();
  out.row_yz(10) = se;
  out.row_yz(11) = -cy;
  out.b_yz = se * pb.y() - cy * pb.z();
  return out;
}

LinearSystem assemble(const MeasurementSet& ms, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument, "translation scale must be positive");
  }
  const auto k = static_cast<Eigen::Index>(ms.size());
  LinearSystem ls;
  ls.scale = scale;
  ls.a.resize(2 * k, 12);
  ls.b.resize(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& m = ms[static_cast<std::size_t>(i)];
    const MeasurementRows rows = rows_for_measurement(m);
    ls.a.row(2 * i) = rows.row_xz;
    ls.b(2 * i) = rows.b_xz;
    ls.a.row(2 * i + 1) = rows.row_yz;
    ls.b(2 * i + 1) = rows.b_yz;
    if (std::abs(std::sin(m.doa.elevation)) < kWeakElevation) ls.weak_rows.push_back(m.k);
  }
  ls.a.rightCols<3>() *= scale;
  return ls;
}

double default_scale(const MeasurementSet& ms) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& m : ms) centroid += m.pos_b_ins;
  centroid /= static_cast<double>(ms.size());
  double sum_sq = 0.0;
  for (const auto& m : ms) sum_sq += (m.pos_b_ins - centroid).squaredNorm();
  return std::max(1.0, std::sqrt(sum_sq / static_cast<double>(ms.size())));
}

RankDiagnostics rank_diagnostics(const LinearSystem& ls, double eps) {
  RankDiagnostics diag;
  if (ls.rows() == 0) return diag;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ls.a);
  const Eigen::VectorXd& s = svd.singularValues();
  diag.singular_values.head(s.size()) = s;
  const double smax = s.size() > 0 ? s(0) : 0.0;
  const double threshold =
      eps * smax * static_cast<double>(std::max<Eigen::Index>(ls.rows(), 12));
  diag.rank = static_cast<int>((s.array() > threshold).count());
  const double smin = diag.singular_values(11);
  diag.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  return diag;
}

NongenericTrajectoryError::NongenericTrajectoryError(RankDiagnostics diag)
    : Error(ErrorCode::kNongenericTrajectory,
            "nongeneric trajectory: rank(A) = " + std::to_string(diag.rank) + " < 12"),
      diag_(std::move(diag)) {}

UnknownVector solve_noiseless(const LinearSystem& ls, double eps) {
  if (ls.rows() < 12) {
    throw Error(ErrorCode::kInsufficientMeasurements,
                "insufficient measurements: need at least 6 for the linear solve");
  }
  RankDiagnostics diag = rank_diagnostics(ls, eps);
  if (diag.rank < 12) throw NongenericTrajectoryError(std::move(diag));

  UnknownVector psi = ls.a.colPivHouseholderQr().solve(ls.b);
  psi.tail<3>() *= ls.scale;
  return psi;
}

}  // namespace doaloc
