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

#include "ilsrd/orbital_dynamics.hpp"
#include "ilsrd/random.hpp"

namespace ilsrd {

/// Zero-mean Gaussian perturbation of an observed state.
struct NoiseConfig {
  bool enabled = true;
  double sigma_r = 0.0;        ///< m
  double sigma_v = 0.0;        ///< m/s
  double sigma_omega = 0.0;    ///< rad/s
  double sigma_att_deg = 0.0;  ///< small-rotation std, degrees per axis

  static NoiseConfig off() { return NoiseConfig{false, 0, 0, 0, 0}; }
  /// Sensor noise injected while recording expert demonstrations.
  static NoiseConfig demonstration() { return {true, 0.05, 0.005, 0.001, 0.1}; }
  /// Additional observation noise of the robustness protocol.
  static NoiseConfig robustness() { return {true, 0.1, 0.01, 0.002, 0.5}; }

  bool is_active() const {
    return enabled && (sigma_r > 0 || sigma_v > 0 || sigma_omega > 0 || sigma_att_deg > 0);
  }
  void validate() const;
};

/// Perturbs r, v, omega additively and q by a random small rotation.
/// Returns the state unchanged (bit for bit) when the config is inactive.
RelativeState inject_noise(const RelativeState& s, const NoiseConfig& cfg, Rng& rng);

}  // namespace ilsrd
