#pragma once

#include "doaloc/frames.hpp"

namespace doaloc {

/// Orthogonal matrix U V^T closest to m in Frobenius norm, where
/// m = U diag(s) V^T. The result may be a reflection (det = -1).
/// Throws Error(kIllDefinedProjection) when m has rank < 2.
Mat3 nearest_orthogonal(const Mat3& m);

struct RotationProjection {
  Rotation3 rotation;
  /// Set when a determinant flip was needed and sigma2 ~ sigma3, so the
  /// minimiser is not unique.
  bool non_unique = false;
};

/// Closest proper rotation: U diag(1, 1, det(U V^T)) V^T.
RotationProjection project_to_rotation(const Mat3& m);

inline Rotation3 nearest_rotation(const Mat3& m) { return project_to_rotation(m).rotation; }

}  // namespace doaloc
