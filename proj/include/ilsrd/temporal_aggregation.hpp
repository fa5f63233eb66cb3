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

// Exponentially weighted fusion of overlapping predicted sequences.

#pragma once

#include <deque>
#include <vector>

#include "ilsrd/orbital_dynamics.hpp"

namespace ilsrd {

struct AggregationConfig {
  double kappa = 0.01;
  int n = 500;

  void validate() const;
};

/// w_i = exp(-kappa * i), i = 1..m, normalized to sum to one.
std::vector<double> aggregation_weights(int n, double kappa, int m);

/**
 * @brief Last n predicted sequences, each tagged with its 1-based step.
 *
 * The prediction made at step s covers steps s .. s+n-1; frame k (1-based)
 * of it is the action for step s+k-1.
 */
class AggregationBuffer {
 public:
  explicit AggregationBuffer(int n);

  int capacity() const { return n_; }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Steps must strictly increase. Drops predictions older than step - n + 1.
  void push(long step, std::vector<StateArray> frames);

  /// Steps of the held predictions, oldest first.
  std::vector<long> steps() const;
  const std::vector<StateArray>& frames_at(std::size_t i) const { return entries_[i].frames; }

 private:
  struct Entry {
    long step;
    std::vector<StateArray> frames;
  };
  int n_;
  std::deque<Entry> entries_;
};

/**
 * Fused action for step t. The m predictions covering t are ranked oldest
 * first (i = 1 .. m) and weighted by aggregation_weights(n, kappa, m); the
 * prediction made at s contributes its frame t - s + 1. Quaternion blocks are
 * flipped into the hemisphere of the newest prediction's frame before the sum,
 * and renormalized afterwards unless `renormalize` is false.
 * Throws Error when no held prediction covers t.
 */
StateArray aggregate_action(const AggregationBuffer& buffer, long t, double kappa,
                            bool renormalize = true);

}  // namespace ilsrd
