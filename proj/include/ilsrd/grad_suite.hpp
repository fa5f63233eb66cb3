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
#include <string>
#include <vector>

namespace ilsrd::ad {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
};

/// Finite-difference check of every tape primitive (and each differentiable
/// argument) at `points` random inputs; reports the worst error per entry.
std::vector<GradCheckResult> check_all_primitives(std::uint64_t seed = 8, int points = 5);

}  // namespace ilsrd::ad
