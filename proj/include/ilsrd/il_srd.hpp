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

// Transformer VAE policy that maps the current relative state to a sequence
// of n future states.

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ilsrd/imitation.hpp"
#include "ilsrd/parameters.hpp"

namespace ilsrd {

enum class DecoderTarget {
  kAnchored,   ///< current state embedding repeated over the horizon
  kZero,       ///< zeros plus positional table
  kLearnable,  ///< free n x d parameter plus positional table
};

std::string to_string(DecoderTarget t);
DecoderTarget decoder_target_from_string(const std::string& s);

struct ModelConfig {
  int d = 256;
  int heads = 4;
  int encoder_layers = 3;
  int decoder_layers = 4;
  int n = 500;
  int z_dim = 32;
  int ff_mult = 4;
  double lr = 7e-4;
  double weight_decay = 5e-5;
  int batch_size = 256;
  int epochs = 400;
  /// Training items drawn per epoch; 0 means one per (trajectory, t) pair.
  long samples_per_epoch = 0;
  double kappa = 0.01;
  LossWeights loss;
  DecoderTarget decoder_target = DecoderTarget::kAnchored;
  /// Add the sinusoidal table to the decoder queries.
  bool decoder_positional = true;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// pe[pos, 2i] = sin(pos / 10000^(2i/d)), pe[pos, 2i+1] = cos(...).
ad::Mat sinusoidal_table(int rows, int d);

struct EncoderOutput {
  ad::Tensor mu;
  ad::Tensor logvar;
};

struct DecoderInputs {
  ad::Tensor memory;  ///< 2 x d
  ad::Tensor target;  ///< n x d
};

class IlSrdModel {
 public:
  IlSrdModel(ModelConfig cfg, NormStats stats, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  const NormStats& stats() const { return stats_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  /// Tokens [state; actions] + positional table through the encoder stack;
  /// mu and logvar are projected from the state token.
  EncoderOutput encode(ad::Tape& t, const ad::Tensor& state_norm,
                       const ad::Tensor& actions_norm) const;
  static ad::Tensor reparameterize(ad::Tape& t, const ad::Tensor& mu, const ad::Tensor& logvar,
                                   const ad::Tensor& eps);
  DecoderInputs build_decoder_inputs(ad::Tape& t, const ad::Tensor& z,
                                     const ad::Tensor& state_norm) const;
  /// n x 13 normalized frames.
  ad::Tensor decode(ad::Tape& t, const DecoderInputs& in) const;

  /// Teacher-forced loss for one item; eps is 1 x z_dim.
  ad::Tensor item_loss(ad::Tape& t, const TrainingItem& item, const ad::Mat& eps,
                       LossBreakdown* parts = nullptr) const;

  /// Physical-unit frames with unit quaternions, decoded with z = 0.
  std::vector<StateArray> predict(const RelativeState& observed) const;

  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  static IlSrdModel load(const std::filesystem::path& path);

 private:
  ad::Tensor p(const std::string& name) const { return params_.get(name); }
  ad::Tensor attention(ad::Tape& t, const std::string& prefix, const ad::Tensor& q_in,
                       const ad::Tensor& kv_in) const;
  ad::Tensor feed_forward(ad::Tape& t, const std::string& prefix, const ad::Tensor& x) const;
  ad::Tensor norm(ad::Tape& t, const std::string& prefix, const ad::Tensor& x) const;

  ModelConfig cfg_;
  NormStats stats_;
  ad::ParameterStore params_;
  ad::Tensor enc_table_;
  ad::Tensor dec_table_;
};

/// One optimizer step on a batch; returns the batch-mean loss breakdown.
/// Throws Error naming the batch items when the loss is not finite.
LossBreakdown train_step(IlSrdModel& model, ad::AdamW& opt, const std::vector<TrainingItem>& batch,
                         Rng& eps_rng, const std::string& batch_label = "");

struct TrainResult {
  IlSrdModel model;
  std::vector<CurvePoint> curve;
};

/// Fits normalization on `demos`, then trains from `seed` for cfg.epochs.
TrainResult train_il_srd(const std::vector<Demonstration>& demos, const ModelConfig& cfg,
                         std::uint64_t seed, const TrainOptions& opts = {});

}  // namespace ilsrd
