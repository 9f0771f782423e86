#include "doaloc/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "doaloc/error.hpp"
#include "doaloc/rng.hpp"

namespace doaloc {

Rotation3::Rotation3(const Mat3& m) : m_(m) {
  if (!is_valid(m)) {
    throw Error(ErrorCode::kInvalidArgument, "matrix is not a proper rotation");
  }
}

bool Rotation3::is_valid(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  return (m * m.transpose() - Mat3::Identity()).norm() < tol &&
         std::abs(m.determinant() - 1.0) < tol;
}

Rotation3 Rotation3::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zero rotation axis");
  return Rotation3(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix(), Trusted{});
}

Rotation3 Rotation3::exp(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    // Second-order series; exact to rounding at this magnitude.
    const Mat3 k = hat(omega);
    const Mat3 m = Mat3::Identity() + k + 0.5 * k * k;
    return Rotation3(Eigen::Quaterniond(m).normalized().toRotationMatrix(), Trusted{});
  }
  return from_axis_angle(omega / angle, angle);
}

Rotation3 Rotation3::from_quaternion(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  if (!(q.norm() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zero quaternion");
  return Rotation3(q.normalized().toRotationMatrix(), Trusted{});
}

Rotation3 Rotation3::transpose() const { return Rotation3(m_.transpose(), Trusted{}); }

Rotation3 Rotation3::operator*(const Rotation3& other) const {
  return Rotation3(m_ * other.m_, Trusted{});
}

Vec3 apply_transform(const FrameTransform& t, const Vec3& p_global) {
  return t.rotation * p_global + t.translation;
}

FrameTransform invert_transform(const FrameTransform& t) {
  const Rotation3 rt = t.rotation.transpose();
  return FrameTransform{rt, -(rt * t.translation)};
}

Vec3 doa_unit_vector(const DoaAngles& a) {
  const double ce = std::cos(a.elevation);
  return Vec3(std::cos(a.azimuth) * ce, std::sin(a.azimuth) * ce, std::sin(a.elevation));
}

DoaAngles angles_from_vector(const Vec3& d) {
  const double n = d.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kDegenerateDisplacement, "degenerate displacement");
  }
  const double horizontal = std::hypot(d.x(), d.y());
  DoaAngles out;
  out.azimuth = horizontal > 0.0 ? std::atan2(d.y(), d.x()) : 0.0;
  if (out.azimuth == -std::numbers::pi) out.azimuth = std::numbers::pi;
  // atan2 form keeps full precision near the poles where asin loses it.
  out.elevation = std::atan2(d.z(), horizontal);
  return out;
}

double geodesic_distance(const Rotation3& r1, const Rotation3& r2) {
  // Same angle as arccos((tr - 1) / 2), but via atan2(sin, cos): arccos near 1
  // has an absolute error floor of ~1e-8 rad from rounding alone.
  const Mat3 m = r1.matrix().transpose() * r2.matrix();
  const double c = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axis(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  return std::atan2(0.5 * axis.norm(), c);
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

Rotation3 random_rotation(Rng& rng) {
  double w = 0, x = 0, y = 0, z = 0;
  do {
    w = rng.normal();
    x = rng.normal();
    y = rng.normal();
    z = rng.normal();
  } while (w * w + x * x + y * y + z * z < 1e-12);
  return Rotation3::from_quaternion(w, x, y, z);
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace doaloc
