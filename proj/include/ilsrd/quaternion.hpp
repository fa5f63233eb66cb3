// Copyright 2026 The ilsrd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ilsrd/error.hpp"

namespace ilsrd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/**
 * @brief Scalar-first Hamilton quaternion.
 *
 * q and -q encode the same rotation; every attitude-error helper in this
 * header is invariant under that sign flip.
 */
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }

  /// Rotation of `angle` radians about `axis` (axis need not be unit).
  static Quaternion from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = axis.normalized();
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), s * a.x(), s * a.y(), s * a.z()};
  }

  /// Exponential map of a rotation vector (angle * axis).
  static Quaternion from_rotation_vector(const Vec3& rv) {
    const double angle = rv.norm();
    if (angle < 1e-12) {
      Quaternion q{1.0, 0.5 * rv.x(), 0.5 * rv.y(), 0.5 * rv.z()};
      return q.normalized();
    }
    return from_axis_angle(rv / angle, angle);
  }

  Vec3 vec() const { return {x, y, z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  /// Inverse of a general non-zero quaternion; equals the conjugate for unit q.
  Quaternion inverse() const {
    const double n2 = w * w + x * x + y * y + z * z;
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw DegenerateQuaternion();
    return {w / n2, -x / n2, -y / n2, -z / n2};
  }

  Quaternion normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateQuaternion();
    return {w / n, x / n, y / n, z / n};
  }

  /// Same rotation, scalar part non-negative.
  Quaternion positive_hemisphere() const { return w < 0.0 ? -*this : *this; }

  Quaternion operator-() const { return {-w, -x, -y, -z}; }
  Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }

  /// Hamilton product.
  Quaternion operator*(const Quaternion& b) const {
    return {w * b.w - x * b.x - y * b.y - z * b.z,
            w * b.x + x * b.w + y * b.z - z * b.y,
            w * b.y - x * b.z + y * b.w + z * b.x,
            w * b.z + x * b.y - y * b.x + z * b.w};
  }

  /// Rotation matrix R such that R v = q (0,v) q*.
  Mat3 to_rotation_matrix() const {
    Mat3 m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
  }

  /// Logarithm map to a rotation vector with angle in [0, pi].
  Vec3 to_rotation_vector() const {
    const Quaternion p = positive_hemisphere();
    const double vn = p.vec().norm();
    if (vn < 1e-12) return 2.0 * p.vec();
    const double angle = 2.0 * std::atan2(vn, p.w);
    return p.vec() * (angle / vn);
  }
};

inline Quaternion operator*(double s, const Quaternion& q) { return q * s; }

/// Geodesic angle 2 acos|Re(q ⊗ q_ref⁻¹)| in [0, pi]. Throws for non-unit input.
inline double quat_error_angle(const Quaternion& q, const Quaternion& q_ref) {
  if (std::abs(q.norm() - 1.0) > 1e-6 || std::abs(q_ref.norm() - 1.0) > 1e-6) {
    throw Error("quat_error_angle: non-unit quaternion");
  }
  // atan2 form of 2 acos|w|; keeps precision near zero angle.
  const Quaternion d = q * q_ref.conjugate();
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w));
}

}  // namespace ilsrd
