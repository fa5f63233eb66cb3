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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilsrd/random.hpp"
#include "ilsrd/tensor.hpp"

namespace ilsrd::ad {

/// Named trainable tensors in insertion order.
class ParameterStore {
 public:
  /// Throws ConfigError on a duplicate name.
  Tensor add(const std::string& name, Mat init);
  /// uniform(-k, k) with k = 1/sqrt(rows), the fan-in of an (in x out) weight.
  Tensor add_uniform(const std::string& name, int rows, int cols, int fan_in, Rng& rng);
  Tensor add_constant(const std::string& name, int rows, int cols, double value);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Multiplies every accumulated gradient by s.
  void scale_grad(double s);

  std::vector<Tensor> tensors() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

struct AdamWConfig {
  double lr = 7e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-5;
};

/// Adam with decoupled weight decay: w <- w - lr*wd*w - lr*m_hat/(sqrt(v_hat)+eps).
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterStore& params);
  long steps() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  long t_ = 0;
  std::map<std::string, Mat> m_;
  std::map<std::string, Mat> v_;
};

/**
 * Checkpoint layout: 8-byte little-endian header length, JSON header
 * (format_version, parameters [{name, shape}], plus `meta`), then every
 * parameter as little-endian float64 in header order.
 */
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                     const nlohmann::json& meta);

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::string> names;
  std::map<std::string, Mat> values;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into an already-built store; names and shapes must match.
void load_into(const Checkpoint& ckpt, ParameterStore& params);

}  // namespace ilsrd::ad
