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

// Pieces shared by every imitation learner: channel normalization, training
// item extraction and the state-reconstruction losses.

#pragma once

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "ilsrd/dataset.hpp"
#include "ilsrd/tensor.hpp"

namespace ilsrd {

/// Per-channel z-score statistics over the 13 state channels.
struct NormStats {
  StateArray mean{};
  StateArray std{};

  static constexpr double kStdFloor = 1e-8;

  StateArray normalize(const StateArray& x) const;
  /// Inverse of normalize followed by quaternion renormalization.
  StateArray denormalize(const StateArray& x) const;
  /// Inverse of normalize without touching the quaternion block.
  StateArray denormalize_raw(const StateArray& x) const;

  nlohmann::json to_json() const;
  static NormStats from_json(const nlohmann::json& j);
};

/// Statistics over every observed state of every trajectory.
NormStats fit_normalization(const std::vector<Demonstration>& demos);

/// Observed state at t and the n following observed states as targets,
/// padded past the end by repeating the final state.
struct TrainingItem {
  StateArray state{};
  std::vector<StateArray> frames;
};

TrainingItem sample_training_item(const Demonstration& demo, std::size_t t, int n);

/// Stacks arrays as rows of a matrix, normalizing each row.
ad::Mat normalized_rows(const std::vector<StateArray>& rows, const NormStats& stats);
ad::Mat normalized_row(const StateArray& row, const NormStats& stats);

struct LossWeights {
  double r = 1.0;
  double v = 1.0;
  double q = 1.0;
  double omega = 1.0;
  double kl = 10.0;
  double beta = 0.5;  ///< share of the normalized-space term in l_r, l_v, l_omega

  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
};

struct ReconstructionLoss {
  ad::Tensor r, v, q, omega;
};

/**
 * Per-block losses between predicted and target frames given in normalized
 * units (n x 13). l_r, l_v and l_omega are per-frame squared errors summed
 * over the block and averaged over frames, mixed as beta * normalized +
 * (1 - beta) * physical. l_q is the mean squared geodesic angle between the
 * renormalized physical quaternions.
 */
ReconstructionLoss reconstruction_loss(ad::Tape& tape, const ad::Tensor& pred_norm,
                                       const ad::Tensor& target_norm, const NormStats& stats,
                                       double beta);

/// -1/2 * sum(1 + logvar - mu^2 - exp(logvar)), for single-sample 1 x z rows.
ad::Tensor kl_loss(ad::Tape& tape, const ad::Tensor& mu, const ad::Tensor& logvar);

/// Weighted sum; `kl` may be undefined for learners without a latent.
ad::Tensor total_loss(ad::Tape& tape, const ReconstructionLoss& parts, const ad::Tensor& kl,
                      const LossWeights& w);

struct LossBreakdown {
  double r = 0, v = 0, q = 0, omega = 0, kl = 0, total = 0;

  /// this += w * o, component-wise.
  void accumulate(const LossBreakdown& o, double w);
};

struct CurvePoint {
  int epoch = 0;
  LossBreakdown loss;
};

struct TrainOptions {
  std::function<void(const std::string&)> log;
  std::function<void(const CurvePoint&)> on_epoch;
};

/// Writes "epoch,l_r,l_v,l_q,l_omega,kl,total" rows.
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);

/// Maps a uniform draw over all (trajectory, t) transitions to its pair.
class TransitionSampler {
 public:
  explicit TransitionSampler(const std::vector<Demonstration>& demos);
  std::size_t size() const { return offsets_.back(); }
  std::pair<std::size_t, std::size_t> draw(Rng& rng) const;

 private:
  std::vector<std::size_t> offsets_{0};
};

/// Trains one batch of `count` fresh items; `items` collects their ids.
using BatchFn = std::function<LossBreakdown(const std::string& label, long count, std::string& items)>;

/// Runs `epochs` epochs of `per_epoch` items in batches of at most
/// `batch_size`, logging and returning the item-weighted mean loss per epoch.
std::vector<CurvePoint> run_epochs(int epochs, long per_epoch, int batch_size,
                                   const TrainOptions& opts, const BatchFn& batch);

}  // namespace ilsrd
