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

// Reference controllers: a dual-loop PID and a single-step behavioral-cloning
// network.

#pragma once

#include <filesystem>
#include <functional>

#include "ilsrd/imitation.hpp"
#include "ilsrd/mpc_expert.hpp"
#include "ilsrd/parameters.hpp"

namespace ilsrd {

/**
 * Translational and rotational PID gains. Defaults come from loop shaping on
 * the n0 = 0 double integrator: translation at wn = 0.05 rad/s, zeta = 1;
 * rotation at wn = 0.5 rad/s, zeta = 1 for J ~ 12 kg m^2.
 */
struct PidConfig {
  Vec3 kp_r = Vec3::Constant(0.0025);
  Vec3 ki_r = Vec3::Constant(1e-6);
  Vec3 kd_r = Vec3::Constant(0.1);
  Vec3 kp_q = Vec3::Constant(6.0);
  Vec3 ki_q = Vec3::Constant(0.0);
  Vec3 kd_q = Vec3::Constant(12.0);
  Vec3 k_rate = Vec3::Constant(6.0);  ///< direct body-rate damping
  double filter_cutoff = 5.0;         ///< rad/s, second-order low-pass on derivatives
  double filter_damping = 0.7;
  double derivative_blend = 0.8;  ///< share of measured rate vs error difference
  double integral_limit_r = 50.0;   ///< m*s
  double integral_limit_q = 1.0;    ///< s
  double thrust_limit = 0.2;
  double torque_limit = 8.0;
  double dt = 0.1;

  void validate() const;
};

/// Discrete second-order low-pass (bilinear transform of
/// wc^2 / (s^2 + 2 zeta wc s + wc^2)), one instance per channel.
class LowPass2 {
 public:
  LowPass2() = default;
  LowPass2(double cutoff, double damping, double dt);

  double step(double x);
  void reset() { x1_ = x2_ = y1_ = y2_ = 0; }

 private:
  double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

class PidController {
 public:
  PidController(PidConfig cfg, mpc::TargetState target);

  /// Wrench from an observed state; always inside the actuator box.
  ControlInput step(const RelativeState& observed);
  void reset();
  const PidConfig& config() const { return cfg_; }

 private:
  PidConfig cfg_;
  mpc::TargetState target_;
  Vec3 int_r_ = Vec3::Zero(), int_q_ = Vec3::Zero();
  Vec3 prev_er_ = Vec3::Zero(), prev_eq_ = Vec3::Zero();
  bool primed_ = false;
  std::array<LowPass2, 3> lp_r_, lp_q_;
};

/// 13 -> hidden x 4 -> 13 ReLU network trained on (s_t, s_t+1) pairs.
struct BcConfig {
  int hidden = 256;
  double lr = 7e-4;
  double weight_decay = 5e-5;
  int epochs = 50;
  int batch_size = 256;
  long samples_per_epoch = 0;  ///< 0 means one per transition
  LossWeights loss;

  void validate() const;
  nlohmann::json to_json() const;
  static BcConfig from_json(const nlohmann::json& j);
};

class BcModel {
 public:
  static constexpr int kLayers = 5;

  BcModel(BcConfig cfg, NormStats stats, std::uint64_t init_seed);

  const BcConfig& config() const { return cfg_; }
  const NormStats& stats() const { return stats_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  /// Normalized 1 x 13 in, normalized 1 x 13 out.
  ad::Tensor forward(ad::Tape& t, const ad::Tensor& state_norm) const;
  /// Loss of predicting `next` from `state` (n = 1, no KL term).
  ad::Tensor item_loss(ad::Tape& t, const StateArray& state, const StateArray& next,
                       LossBreakdown* parts = nullptr) const;
  /// Next commanded state in physical units with a unit quaternion.
  StateArray predict(const RelativeState& observed) const;

  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  static BcModel load(const std::filesystem::path& path);

 private:
  BcConfig cfg_;
  NormStats stats_;
  ad::ParameterStore params_;
};

struct BcTrainResult {
  BcModel model;
  std::vector<CurvePoint> curve;
};

/// One optimizer step; throws Error naming the batch when the loss is not finite.
LossBreakdown bc_train_step(BcModel& model, ad::AdamW& opt,
                            const std::vector<std::pair<StateArray, StateArray>>& batch,
                            const std::string& batch_label = "");

BcTrainResult bc_train(const std::vector<Demonstration>& demos, const BcConfig& cfg,
                       std::uint64_t seed, const TrainOptions& opts = {});

}  // namespace ilsrd
