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

#include "ilsrd/temporal_aggregation.hpp"

#include <cmath>

namespace ilsrd {

void AggregationConfig::validate() const {
  if (!(kappa >= 0) || !std::isfinite(kappa)) throw ConfigError("aggregation: kappa must be >= 0");
  if (n < 1) throw ConfigError("aggregation: n must be positive");
}

std::vector<double> aggregation_weights(int n, double kappa, int m) {
  if (m < 1 || m > n) throw Error("aggregation_weights: need 1 <= m <= n");
  if (!(kappa >= 0)) throw ConfigError("aggregation: kappa must be >= 0");
  std::vector<double> w(m);
  double sum = 0;
  // Shifted by the first term; the ratio is unchanged and underflow is delayed.
  for (int i = 1; i <= m; ++i) sum += (w[i - 1] = std::exp(-kappa * (i - 1)));
  for (double& x : w) x /= sum;
  return w;
}

AggregationBuffer::AggregationBuffer(int n) : n_(n) {
  if (n < 1) throw ConfigError("aggregation buffer: n must be positive");
}

void AggregationBuffer::push(long step, std::vector<StateArray> frames) {
  if (static_cast<int>(frames.size()) != n_) {
    throw ShapeError("aggregation buffer: expected " + std::to_string(n_) + " frames");
  }
  if (!entries_.empty() && step <= entries_.back().step) {
    throw Error("aggregation buffer: steps must increase");
  }
  entries_.push_back({step, std::move(frames)});
  while (entries_.front().step < step - n_ + 1) entries_.pop_front();
}

std::vector<long> AggregationBuffer::steps() const {
  std::vector<long> s;
  for (const auto& e : entries_) s.push_back(e.step);
  return s;
}

StateArray aggregate_action(const AggregationBuffer& buffer, long t, double kappa,
                            bool renormalize) {
  const int n = buffer.capacity();
  std::vector<std::size_t> covering;
  const std::vector<long> steps = buffer.steps();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] <= t && t - steps[i] < n) covering.push_back(i);
  }
  if (covering.empty()) throw Error("aggregate_action: no prediction covers step " + std::to_string(t));

  const std::vector<double> w = aggregation_weights(n, kappa, static_cast<int>(covering.size()));
  const std::size_t newest = covering.back();
  const StateArray& ref = buffer.frames_at(newest)[t - steps[newest]];

  StateArray out{};
  for (std::size_t r = 0; r < covering.size(); ++r) {
    const std::size_t e = covering[r];
    const StateArray& f = buffer.frames_at(e)[t - steps[e]];
    double dot = 0;
    for (int c = 6; c < 10; ++c) dot += f[c] * ref[c];
    for (std::size_t c = 0; c < kStateDim; ++c) {
      const double sign = (c >= 6 && c < 10 && dot < 0) ? -1.0 : 1.0;
      out[c] += w[r] * sign * f[c];
    }
  }
  if (renormalize) {
    const double norm = std::sqrt(out[6] * out[6] + out[7] * out[7] + out[8] * out[8] + out[9] * out[9]);
    if (!(norm > 0) || !std::isfinite(norm)) throw DegenerateQuaternion();
    for (int c = 6; c < 10; ++c) out[c] /= norm;
  }
  return out;
}

}  // namespace ilsrd
