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

// JSON conversions for configuration structs shared by the manifest,
// checkpoint headers, reports and the run configuration.

#pragma once

#include <json.hpp>

#include "ilsrd/mpc_expert.hpp"
#include "ilsrd/noise.hpp"

namespace ilsrd {

using Json = nlohmann::json;

Json to_json(const NoiseConfig& c);
NoiseConfig noise_from_json(const Json& j);

Json to_json(const OrbitConfig& c);
OrbitConfig orbit_from_json(const Json& j);

Json to_json(const SpacecraftParams& p);
SpacecraftParams spacecraft_from_json(const Json& j);

Json to_json(const mpc::TargetState& t);
mpc::TargetState target_from_json(const Json& j);

Json to_json(const mpc::MpcConfig& c);
mpc::MpcConfig mpc_from_json(const Json& j);

Json to_json(const mpc::Problem& p);
mpc::Problem problem_from_json(const Json& j);

Json to_json(const RelativeState& s);

/// Throws ConfigError when `j` has a key outside `allowed`.
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& where);

}  // namespace ilsrd
