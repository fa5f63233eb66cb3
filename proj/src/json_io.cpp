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

#include "ilsrd/json_io.hpp"

#include <algorithm>

namespace ilsrd {

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return key == a; });
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

namespace {

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <int N>
Json weights_json(const Eigen::Matrix<double, N, 1>& w) {
  Json a = Json::array();
  for (int i = 0; i < N; ++i) a.push_back(w[i]);
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> weights_from(const Json& j, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != N) {
    throw ConfigError(where + ": expected " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> w;
  for (int i = 0; i < N; ++i) w[i] = j[i].get<double>();
  return w;
}

}  // namespace

Json to_json(const NoiseConfig& c) {
  return {{"enabled", c.enabled},
          {"sigma_r", c.sigma_r},
          {"sigma_v", c.sigma_v},
          {"sigma_omega", c.sigma_omega},
          {"sigma_att_deg", c.sigma_att_deg}};
}

NoiseConfig noise_from_json(const Json& j) {
  reject_unknown_keys(j, {"enabled", "sigma_r", "sigma_v", "sigma_omega", "sigma_att_deg"},
                      "noise");
  NoiseConfig c = NoiseConfig::off();
  c.enabled = true;
  read_if(j, "enabled", c.enabled);
  read_if(j, "sigma_r", c.sigma_r);
  read_if(j, "sigma_v", c.sigma_v);
  read_if(j, "sigma_omega", c.sigma_omega);
  read_if(j, "sigma_att_deg", c.sigma_att_deg);
  c.validate();
  return c;
}

Json to_json(const OrbitConfig& c) {
  return {{"mu", c.mu}, {"r_orbit", c.r_orbit}, {"dt", c.dt}, {"n0", c.n0()}};
}

OrbitConfig orbit_from_json(const Json& j) {
  reject_unknown_keys(j, {"mu", "r_orbit", "dt", "n0"}, "orbit");
  OrbitConfig c;
  read_if(j, "mu", c.mu);
  read_if(j, "r_orbit", c.r_orbit);
  read_if(j, "dt", c.dt);
  c.validate();
  return c;
}

Json to_json(const SpacecraftParams& p) {
  Json inertia = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) inertia.push_back(p.inertia()(r, c));
  }
  return {{"mass", p.mass()},
          {"inertia", inertia},
          {"thrust_limit", p.thrust_limit()},
          {"torque_limit", p.torque_limit()}};
}

SpacecraftParams spacecraft_from_json(const Json& j) {
  reject_unknown_keys(j, {"mass", "inertia", "thrust_limit", "torque_limit"}, "spacecraft");
  const SpacecraftParams d;
  double mass = d.mass();
  double thrust = d.thrust_limit();
  double torque = d.torque_limit();
  Mat3 J = d.inertia();
  read_if(j, "mass", mass);
  read_if(j, "thrust_limit", thrust);
  read_if(j, "torque_limit", torque);
  if (j.contains("inertia")) {
    const Json& a = j.at("inertia");
    if (!a.is_array() || a.size() != 9) throw ConfigError("spacecraft.inertia: expected 9 numbers");
    for (int k = 0; k < 9; ++k) J(k / 3, k % 3) = a[k].get<double>();
  }
  return SpacecraftParams(mass, J, thrust, torque);
}

Json to_json(const mpc::TargetState& t) {
  return {{"r_hat", vec_json(t.r_hat)}, {"q_hat", Json::array({t.q_hat.w, t.q_hat.x, t.q_hat.y, t.q_hat.z})}};
}

mpc::TargetState target_from_json(const Json& j) {
  reject_unknown_keys(j, {"r_hat", "q_hat"}, "target");
  mpc::TargetState t;
  if (j.contains("r_hat")) t.r_hat = vec_from(j.at("r_hat"), "target.r_hat");
  if (j.contains("q_hat")) {
    const Json& q = j.at("q_hat");
    if (!q.is_array() || q.size() != 4) throw ConfigError("target.q_hat: expected 4 numbers");
    t.q_hat = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
  }
  t.validate();
  return t;
}

Json to_json(const mpc::MpcConfig& c) {
  return {{"Np", c.prediction_horizon},
          {"Nc", c.control_horizon},
          {"Q", weights_json<13>(c.Q)},
          {"R", weights_json<6>(c.R)},
          {"P", weights_json<13>(c.P)},
          {"u_min", c.u_min},
          {"u_max", c.u_max},
          {"sqp_iters", c.sqp_iters},
          {"step_tol", c.step_tol}};
}

mpc::MpcConfig mpc_from_json(const Json& j) {
  reject_unknown_keys(j, {"Np", "Nc", "Q", "R", "P", "u_min", "u_max", "sqp_iters", "step_tol"},
                      "mpc");
  mpc::MpcConfig c;
  read_if(j, "Np", c.prediction_horizon);
  read_if(j, "Nc", c.control_horizon);
  if (j.contains("Q")) c.Q = weights_from<13>(j.at("Q"), "mpc.Q");
  if (j.contains("R")) c.R = weights_from<6>(j.at("R"), "mpc.R");
  if (j.contains("P")) c.P = weights_from<13>(j.at("P"), "mpc.P");
  read_if(j, "u_min", c.u_min);
  read_if(j, "u_max", c.u_max);
  read_if(j, "sqp_iters", c.sqp_iters);
  read_if(j, "step_tol", c.step_tol);
  c.validate();
  return c;
}

Json to_json(const mpc::Problem& p) {
  return {{"orbit", to_json(p.orbit)},
          {"spacecraft", to_json(p.params)},
          {"mpc", to_json(p.cfg)},
          {"target", to_json(p.target)}};
}

mpc::Problem problem_from_json(const Json& j) {
  reject_unknown_keys(j, {"orbit", "spacecraft", "mpc", "target"}, "problem");
  mpc::Problem p;
  if (j.contains("orbit")) p.orbit = orbit_from_json(j.at("orbit"));
  if (j.contains("spacecraft")) p.params = spacecraft_from_json(j.at("spacecraft"));
  if (j.contains("mpc")) p.cfg = mpc_from_json(j.at("mpc"));
  if (j.contains("target")) p.target = target_from_json(j.at("target"));
  return p;
}

Json to_json(const RelativeState& s) { return s.to_array(); }

}  // namespace ilsrd
