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

#include "ilsrd/noise.hpp"

#include <numbers>

namespace ilsrd {

void NoiseConfig::validate() const {
  if (!(sigma_r >= 0) || !(sigma_v >= 0) || !(sigma_omega >= 0) || !(sigma_att_deg >= 0)) {
    throw ConfigError("noise: standard deviations must be non-negative");
  }
}

RelativeState inject_noise(const RelativeState& s, const NoiseConfig& cfg, Rng& rng) {
  if (!cfg.is_active()) return s;
  RelativeState out = s;
  for (int i = 0; i < 3; ++i) out.r[i] += cfg.sigma_r * rng.normal();
  for (int i = 0; i < 3; ++i) out.v[i] += cfg.sigma_v * rng.normal();
  const double sigma_att = cfg.sigma_att_deg * std::numbers::pi / 180.0;
  const Vec3 rot(sigma_att * rng.normal(), sigma_att * rng.normal(), sigma_att * rng.normal());
  out.q = (s.q * Quaternion::from_rotation_vector(rot)).normalized();
  for (int i = 0; i < 3; ++i) out.omega[i] += cfg.sigma_omega * rng.normal();
  return out;
}

}  // namespace ilsrd
