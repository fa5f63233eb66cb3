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

// The merged run configuration: JSON file + dotted-key overrides.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ilsrd/baselines.hpp"
#include "ilsrd/dataset.hpp"
#include "ilsrd/evaluation.hpp"
#include "ilsrd/il_srd.hpp"
#include "ilsrd/json_io.hpp"

namespace ilsrd {

Json to_json(const PidConfig& c);
PidConfig pid_from_json(const Json& j);

struct EvalSettings {
  int steps = 2500;
  std::vector<std::uint64_t> seeds = kStandardSeeds;
  NoiseConfig disturbed = NoiseConfig::robustness();
};

struct Paths {
  std::string data = "data";
  std::string model = "runs/ilsrd.ckpt";
  std::string bc_model = "runs/bc.ckpt";
};

struct RunConfig {
  std::uint64_t seed = 7;  ///< root seed of every run
  int jobs = 1;
  mpc::Problem problem;
  GenerationConfig generation;  ///< generation.seed and .jobs mirror the root values
  ModelConfig model;
  BcConfig bc;
  PidConfig pid;
  EvalSettings eval;
  Paths paths;

  /// Throws ConfigError on any inconsistent entry.
  void validate() const;
  Json to_json() const;
  /// Keys absent from `j` keep their defaults; unknown keys throw ConfigError.
  static RunConfig from_json(const Json& j);
};

/// Sets `dotted.key` to `value`, parsed as JSON when possible and as a plain
/// string otherwise. The key must already exist in `j`.
void apply_override(Json& j, const std::string& assignment);

/// Defaults, then `file` (when non-empty), then each "a.b=v" override, then
/// validation.
RunConfig resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

}  // namespace ilsrd
