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

// Plot-ready per-channel time series. Output is byte-stable, so re-exporting
// the same inputs reproduces identical files.

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "ilsrd/dataset.hpp"

namespace ilsrd {

/// r_x .. omega_z, in state-vector order.
extern const std::array<const char*, kStateDim> kChannelNames;

/// traj_XXX/<channel>.csv with columns t,true,observed: 13 files per trajectory.
std::vector<std::filesystem::path> export_dataset_series(const Dataset& ds,
                                                         const std::filesystem::path& out);

/// Reads <episodes>/<condition>/<policy>/seed_<seed>.csv as written by the
/// eval command and writes <out>/<condition>/<policy>/<channel>.csv with
/// columns t,seed_<s>... (true states). Throws IoError when nothing is found.
std::vector<std::filesystem::path> export_episode_series(const std::filesystem::path& episodes,
                                                         const std::filesystem::path& out);

}  // namespace ilsrd
