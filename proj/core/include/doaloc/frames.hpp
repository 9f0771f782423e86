#pragma once

#include <Eigen/Core>

namespace doaloc {

class Rng;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Tolerance used to validate orthogonality and unit determinant.
inline constexpr double kRotationTolerance = 1e-9;

/// A proper rotation matrix, stored entry-wise (r_ij = row i, column j).
///
/// Construction from a raw matrix validates ||R R^T - I||_F and |det R - 1|
/// against kRotationTolerance and throws Error(kInvalidArgument) otherwise.
class Rotation3 {
 public:
  Rotation3() : m_(Mat3::Identity()) {}
  explicit Rotation3(const Mat3& m);

  static bool is_valid(const Mat3& m, double tol = kRotationTolerance);

  /// Rotation by `angle` radians about `axis` (normalised internally).
  static Rotation3 from_axis_angle(const Vec3& axis, double angle);
  /// Exponential map of a rotation vector.
  static Rotation3 exp(const Vec3& omega);
  static Rotation3 from_quaternion(double w, double x, double y, double z);

  const Mat3& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  Rotation3 transpose() const;
  Rotation3 operator*(const Rotation3& other) const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  struct Trusted {};
  Rotation3(const Mat3& m, Trusted) : m_(m) {}

  Mat3 m_;
};

/// Maps global coordinates into Agent B's INS frame: p_ins = R p_global + T.
struct FrameTransform {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();
};

/// Direction of arrival. Azimuth in (-pi, pi], elevation in [-pi/2, pi/2].
struct DoaAngles {
  double azimuth = 0.0;
  double elevation = 0.0;
};

Vec3 apply_transform(const FrameTransform& t, const Vec3& p_global);
FrameTransform invert_transform(const FrameTransform& t);

/// Unit vector (cos az cos el, sin az cos el, sin el).
Vec3 doa_unit_vector(const DoaAngles& a);

/// Inverse of doa_unit_vector for any non-zero vector. At the poles
/// (zero horizontal component) the azimuth is reported as 0.
/// Throws Error(kDegenerateDisplacement) for the zero vector.
DoaAngles angles_from_vector(const Vec3& d);

/// Rotation angle of R1^T R2 in [0, pi], evaluated with atan2 for accuracy near 0 and pi.
double geodesic_distance(const Rotation3& r1, const Rotation3& r2);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Haar-uniform rotation: four standard normals, normalised to a unit
/// quaternion, then converted.
Rotation3 random_rotation(Rng& rng);

/// Skew-symmetric matrix with hat(a) * b = a x b.
Mat3 hat(const Vec3& v);

}  // namespace doaloc
