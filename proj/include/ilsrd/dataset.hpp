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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ilsrd/mpc_expert.hpp"
#include "ilsrd/noise.hpp"

namespace ilsrd {

/// One closed-loop expert trajectory. true/observed have length L+1,
/// controls length L.
struct Demonstration {
  std::vector<RelativeState> true_states;
  std::vector<RelativeState> observed_states;
  std::vector<ControlInput> controls;
  std::uint64_t seed = 0;
  long solver_flags = 0;

  std::size_t length() const { return controls.size(); }
  void validate() const;
};

struct GenerationConfig {
  int n_traj = 50;
  int steps = 2500;
  std::uint64_t seed = 7;
  NoiseConfig noise = NoiseConfig::demonstration();
  int jobs = 1;
  int max_attempts = 5;         ///< resamples per trajectory before giving up
  double max_flag_rate = 0.05;  ///< solver-failure fraction that rejects a trajectory
};

struct Dataset {
  std::vector<Demonstration> trajectories;
  GenerationConfig generation;
  mpc::Problem problem;
};

/// Closed-loop MPC run from `initial`, observing through `noise`.
Demonstration run_expert(const RelativeState& initial, int steps, const mpc::Problem& problem,
                         const NoiseConfig& noise, Rng& noise_rng);

using LogFn = std::function<void(const std::string&)>;

/// Trajectory i uses seed derive_seed(seed, i); resampling attempt a > 0
/// uses derive_seed(derive_seed(seed, i), a). Output is independent of `jobs`.
Dataset generate_demonstrations(const GenerationConfig& gen, const mpc::Problem& problem,
                                const LogFn& log = {});

/// Writes manifest.json and traj_NNNN.csv into `dir` (created if missing).
void persist_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Reads and checksum-verifies a dataset directory. Throws IoError naming
/// the offending file (and line for malformed rows).
Dataset load_dataset(const std::filesystem::path& dir);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace ilsrd
