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

#include "ilsrd/orbital_dynamics.hpp"

#include <Eigen/Cholesky>
#include <numbers>

#include "ilsrd/random.hpp"

namespace ilsrd {

StateArray RelativeState::to_array() const {
  return {r.x(), r.y(), r.z(), v.x(), v.y(), v.z(), q.w, q.x, q.y, q.z,
          omega.x(), omega.y(), omega.z()};
}

RelativeState RelativeState::from_array(std::span<const double, kStateDim> a) {
  RelativeState s;
  s.r = {a[0], a[1], a[2]};
  s.v = {a[3], a[4], a[5]};
  s.q = {a[6], a[7], a[8], a[9]};
  s.omega = {a[10], a[11], a[12]};
  return s;
}

bool RelativeState::is_finite() const {
  return r.allFinite() && v.allFinite() && omega.allFinite() && std::isfinite(q.w) &&
         std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

ControlArray ControlInput::to_array() const {
  return {f.x(), f.y(), f.z(), tau.x(), tau.y(), tau.z()};
}

ControlInput ControlInput::from_array(std::span<const double, kControlDim> a) {
  return {{a[0], a[1], a[2]}, {a[3], a[4], a[5]}};
}

void OrbitConfig::validate() const {
  if (!(mu > 0.0) || !(r_orbit > 0.0) || !(dt > 0.0) || !std::isfinite(mu) ||
      !std::isfinite(r_orbit) || !std::isfinite(dt)) {
    throw ConfigError("orbit config: mu, r_orbit and dt must be positive");
  }
}

SpacecraftParams::SpacecraftParams()
    : SpacecraftParams(100.0, Vec3(10.0, 12.0, 14.0).asDiagonal(), 0.2, 8.0) {}

SpacecraftParams::SpacecraftParams(double mass, const Mat3& inertia, double thrust_limit,
                                   double torque_limit)
    : mass_(mass), inertia_(inertia), thrust_limit_(thrust_limit), torque_limit_(torque_limit) {
  if (!(mass > 0.0)) throw ConfigError("spacecraft mass must be positive");
  if (!(thrust_limit > 0.0) || !(torque_limit > 0.0)) {
    throw ConfigError("actuator limits must be positive");
  }
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw ConfigError("inertia matrix must be symmetric");
  }
  Eigen::LLT<Mat3> llt(inertia);
  if (llt.info() != Eigen::Success) throw ConfigError("inertia matrix must be positive definite");
  inertia_inv_ = llt.solve(Mat3::Identity());
}

ControlInput SpacecraftParams::saturate(const ControlInput& u) const {
  ControlInput out;
  for (int i = 0; i < 3; ++i) {
    out.f[i] = std::clamp(u.f[i], -thrust_limit_, thrust_limit_);
    out.tau[i] = std::clamp(u.tau[i], -torque_limit_, torque_limit_);
  }
  return out;
}

Vec3 gravity_accel(const RelativeState& s, const OrbitConfig& cfg) {
  const double n = cfg.n0();
  return {-2.0 * n * s.v.y(), 2.0 * n * s.v.x() + 3.0 * n * n * s.r.y(), -n * n * s.r.z()};
}

Vec3 cw_derivative(const RelativeState& s, const Vec3& f, const OrbitConfig& cfg) {
  return gravity_accel(s, cfg) + f;
}

AttitudeRates attitude_derivative(const Quaternion& q, const Vec3& omega, const Vec3& tau,
                                  const SpacecraftParams& params) {
  const Quaternion q_dot = 0.5 * (q * Quaternion{0.0, omega.x(), omega.y(), omega.z()});
  const Mat3& J = params.inertia();
  const Vec3 omega_dot = params.inertia_inverse() * (tau - omega.cross(J * omega));
  return {q_dot, omega_dot};
}

namespace {

struct Derivative {
  Vec3 r_dot;
  Vec3 v_dot;
  Quaternion q_dot;
  Vec3 omega_dot;
};

Derivative field(const RelativeState& s, const ControlInput& u, const OrbitConfig& cfg,
                 const SpacecraftParams& params) {
  const AttitudeRates att = attitude_derivative(s.q, s.omega, u.tau, params);
  return {s.v, cw_derivative(s, u.f, cfg), att.q_dot, att.omega_dot};
}

RelativeState advance(const RelativeState& s, const Derivative& d, double h) {
  RelativeState out;
  out.r = s.r + h * d.r_dot;
  out.v = s.v + h * d.v_dot;
  out.q = s.q + h * d.q_dot;
  out.omega = s.omega + h * d.omega_dot;
  return out;
}

}  // namespace

RelativeState rk4_step(const RelativeState& s, const ControlInput& u, const OrbitConfig& cfg,
                       const SpacecraftParams& params) {
  const double h = cfg.dt;
  const Derivative k1 = field(s, u, cfg, params);
  const Derivative k2 = field(advance(s, k1, 0.5 * h), u, cfg, params);
  const Derivative k3 = field(advance(s, k2, 0.5 * h), u, cfg, params);
  const Derivative k4 = field(advance(s, k3, h), u, cfg, params);

  RelativeState out;
  const double c = h / 6.0;
  out.r = s.r + c * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot);
  out.v = s.v + c * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
  out.q = s.q + c * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot);
  out.omega = s.omega + c * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot);
  if (!out.is_finite()) throw IntegrationDiverged();
  const double n = out.q.norm();
  if (!(n > 0.0)) throw IntegrationDiverged();
  out.q = out.q * (1.0 / n);
  return out;
}

Mat3 eci_to_lvlh(const Vec3& r_c, const Vec3& v_c) {
  const double rn = r_c.norm();
  if (!(rn > 0.0)) throw Error("relative_from_absolute: chief position has zero length");
  const Vec3 radial = r_c / rn;
  const Vec3 normal = r_c.cross(v_c).normalized();
  const Vec3 transverse = normal.cross(radial);
  Mat3 R;
  R.row(0) = transverse.transpose();
  R.row(1) = radial.transpose();
  R.row(2) = -normal.transpose();
  return R;
}

namespace {

// Frame rotation rate of LVLH relative to ECI, expressed in LVLH.
Vec3 lvlh_rate(const Mat3& R, const Vec3& r_c, const Vec3& v_c) {
  const Vec3 w_eci = r_c.cross(v_c) / r_c.squaredNorm();
  return R * w_eci;
}

}  // namespace

RelativeState relative_from_absolute(const AbsoluteState& chief, const AbsoluteState& deputy) {
  const Mat3 R = eci_to_lvlh(chief.r, chief.v);
  const Vec3 w = lvlh_rate(R, chief.r, chief.v);
  RelativeState rel;
  rel.r = R * (deputy.r - chief.r);
  rel.v = R * (deputy.v - chief.v) - w.cross(rel.r);
  rel.q = chief.q.inverse() * deputy.q;
  rel.omega = deputy.omega - chief.omega;
  return rel;
}

AbsoluteState absolute_from_relative(const AbsoluteState& chief, const RelativeState& rel) {
  const Mat3 R = eci_to_lvlh(chief.r, chief.v);
  const Vec3 w = lvlh_rate(R, chief.r, chief.v);
  AbsoluteState d;
  d.r = chief.r + R.transpose() * rel.r;
  d.v = chief.v + R.transpose() * (rel.v + w.cross(rel.r));
  d.q = chief.q * rel.q;
  d.omega = rel.omega + chief.omega;
  return d;
}

RelativeState sample_initial_state(std::uint64_t seed, const OrbitConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  RelativeState s;
  Vec3 dir;
  do {
    dir = {rng.normal(), rng.normal(), rng.normal()};
  } while (dir.norm() < 1e-9);
  const double distance = 75.0 + 50.0 * rng.uniform();
  s.r = dir.normalized() * distance;
  s.v.setZero();
  s.q = rng.uniform_quaternion();
  s.omega = {rng.uniform(), rng.uniform(), rng.uniform()};
  return s;
}

}  // namespace ilsrd
