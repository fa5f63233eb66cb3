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

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "ilsrd/quaternion.hpp"

namespace ilsrd {

inline constexpr std::size_t kStateDim = 13;
inline constexpr std::size_t kControlDim = 6;

using StateArray = std::array<double, kStateDim>;
using ControlArray = std::array<double, kControlDim>;

/**
 * @brief Deputy state relative to the chief.
 *
 * Channel order is fixed: [r(3), v(3), q(4, scalar-first), omega(3)].
 * Position and velocity live in the LVLH frame, whose axes are
 * x = transverse (along-track), y = radial, z = anti-normal; this is the
 * right-handed assignment in which the Clohessy-Wiltshire equations take the
 * form used by cw_derivative(). omega is expressed in the deputy body frame.
 */
struct RelativeState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quaternion q{};
  Vec3 omega = Vec3::Zero();

  StateArray to_array() const;
  static RelativeState from_array(std::span<const double, kStateDim> a);
  bool is_finite() const;
};

/// Thrust acceleration f (N/kg, LVLH) and body torque tau (N*m).
struct ControlInput {
  Vec3 f = Vec3::Zero();
  Vec3 tau = Vec3::Zero();

  ControlArray to_array() const;
  static ControlInput from_array(std::span<const double, kControlDim> a);
};

struct OrbitConfig {
  double mu = 3.986004418e14;  ///< m^3/s^2
  double r_orbit = 7.5e6;      ///< m; gives n0 ~ 9.720e-4 rad/s
  double dt = 0.1;             ///< s

  double n0() const { return std::sqrt(mu / (r_orbit * r_orbit * r_orbit)); }
  /// Throws ConfigError unless mu, r_orbit and dt are positive and finite.
  void validate() const;
};

/// Deputy mass properties and actuator limits. The inertia is validated
/// (symmetric positive definite) and inverted once at construction.
class SpacecraftParams {
 public:
  SpacecraftParams();
  SpacecraftParams(double mass, const Mat3& inertia, double thrust_limit, double torque_limit);

  double mass() const { return mass_; }
  const Mat3& inertia() const { return inertia_; }
  const Mat3& inertia_inverse() const { return inertia_inv_; }
  double thrust_limit() const { return thrust_limit_; }
  double torque_limit() const { return torque_limit_; }

  /// Per-axis saturation to the actuator box.
  ControlInput saturate(const ControlInput& u) const;

 private:
  double mass_;
  Mat3 inertia_;
  Mat3 inertia_inv_;
  double thrust_limit_;
  double torque_limit_;
};

/// Natural CW acceleration without thrust.
Vec3 gravity_accel(const RelativeState& s, const OrbitConfig& cfg);

/// Translational acceleration: gravity_accel(s) + f.
Vec3 cw_derivative(const RelativeState& s, const Vec3& f, const OrbitConfig& cfg);

struct AttitudeRates {
  Quaternion q_dot;
  Vec3 omega_dot;
};

/// q_dot = 1/2 q ⊗ (0, omega); omega_dot = J^-1 (tau - omega x J omega).
AttitudeRates attitude_derivative(const Quaternion& q, const Vec3& omega, const Vec3& tau,
                                  const SpacecraftParams& params);

/// One classical RK4 step of the combined translational/rotational field,
/// followed by quaternion renormalization. Throws IntegrationDiverged.
RelativeState rk4_step(const RelativeState& s, const ControlInput& u, const OrbitConfig& cfg,
                       const SpacecraftParams& params);

/// Rows of the ECI -> LVLH rotation for a chief at (r_c, v_c).
Mat3 eci_to_lvlh(const Vec3& r_c, const Vec3& v_c);

struct AbsoluteState {
  Vec3 r;
  Vec3 v;
  Quaternion q;
  Vec3 omega;
};

/// Relative state from chief and deputy absolute (ECI) quantities.
/// Throws Error when the chief position has zero length.
RelativeState relative_from_absolute(const AbsoluteState& chief, const AbsoluteState& deputy);

/// Inverse of relative_from_absolute for a given chief.
AbsoluteState absolute_from_relative(const AbsoluteState& chief, const RelativeState& rel);

/// Random initial condition: |r| uniform in [75, 125] m with a uniform
/// direction, uniformly random attitude, omega in [0, 1)^3 rad/s, v = 0.
RelativeState sample_initial_state(std::uint64_t seed, const OrbitConfig& cfg);

}  // namespace ilsrd
