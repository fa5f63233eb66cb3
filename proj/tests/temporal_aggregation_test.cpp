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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ilsrd/random.hpp"

namespace ilsrd {
namespace {

std::vector<StateArray> random_sequence(int n, Rng& rng) {
  std::vector<StateArray> seq(n);
  for (auto& f : seq) {
    for (double& v : f) v = rng.uniform(-2, 2);
    const Quaternion q = rng.uniform_quaternion();
    f[6] = q.w;
    f[7] = q.x;
    f[8] = q.y;
    f[9] = q.z;
  }
  return seq;
}

// Direct transcription of the piecewise sum over a full prediction history
// hist[s - 1] (prediction made at step s), without renormalization.
StateArray oracle(const std::vector<std::vector<StateArray>>& hist, long t, int n, double kappa) {
  const long m = t >= n ? n : t;
  std::vector<double> w(m);
  double total = 0;
  for (long i = 1; i <= m; ++i) total += (w[i - 1] = std::exp(-kappa * static_cast<double>(i)));
  const StateArray& ref = hist[t - 1][0];
  StateArray out{};
  for (long i = 1; i <= m; ++i) {
    const long s = t >= n ? t - n + i : i;
    const long k = t >= n ? n - i + 1 : t - i + 1;
    const StateArray& f = hist[s - 1][k - 1];
    const double dot = f[6] * ref[6] + f[7] * ref[7] + f[8] * ref[8] + f[9] * ref[9];
    for (std::size_t c = 0; c < kStateDim; ++c) {
      const double sign = (c >= 6 && c < 10 && dot < 0) ? -1.0 : 1.0;
      out[c] += w[i - 1] / total * sign * f[c];
    }
  }
  return out;
}

TEST(AggregationWeights, Examples) {
  const auto u = aggregation_weights(7, 0.0, 7);
  for (double x : u) EXPECT_DOUBLE_EQ(x, 1.0 / 7);
  EXPECT_EQ(aggregation_weights(5, 0.3, 1), std::vector<double>{1.0});
  const auto h = aggregation_weights(5, std::log(2.0), 2);
  EXPECT_NEAR(h[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(h[1], 1.0 / 3, 1e-15);
}

TEST(AggregationWeights, SumToOne) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(600));
    const int m = 1 + static_cast<int>(rng.below(n));
    const double kappa = rng.uniform(0, 2);
    const auto w = aggregation_weights(n, kappa, m);
    ASSERT_EQ(static_cast<int>(w.size()), m);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    // Positive wherever exp(-kappa * (m - 1)) is representable.
    if (kappa * (m - 1) < 700) {
      for (double x : w) EXPECT_GT(x, 0.0);
    }
  }
  EXPECT_THROW(aggregation_weights(3, 0.1, 4), Error);
  EXPECT_THROW(aggregation_weights(3, -0.1, 2), ConfigError);
}

TEST(AggregationBuffer, HoldsLastNPredictions) {
  Rng rng(3);
  AggregationBuffer b(4);
  for (long s = 1; s <= 9; ++s) {
    b.push(s, random_sequence(4, rng));
    std::vector<long> expect;
    for (long k = std::max(1L, s - 3); k <= s; ++k) expect.push_back(k);
    EXPECT_EQ(b.steps(), expect);
  }
  EXPECT_THROW(b.push(9, random_sequence(4, rng)), Error);
  EXPECT_THROW(b.push(10, random_sequence(3, rng)), ShapeError);
}

TEST(AggregateAction, SinglePredictionReturnsFirstFrame) {
  Rng rng(4);
  AggregationBuffer b(6);
  auto seq = random_sequence(6, rng);
  b.push(1, seq);
  EXPECT_EQ(aggregate_action(b, 1, 0.01, false), seq[0]);
  const StateArray a = aggregate_action(b, 1, 0.01);
  for (std::size_t c = 0; c < kStateDim; ++c) EXPECT_NEAR(a[c], seq[0][c], 1e-15);
}

TEST(AggregateAction, IdenticalPredictionsGiveThatValue) {
  Rng rng(5);
  const StateArray f = random_sequence(1, rng)[0];
  AggregationBuffer b(5);
  for (long s = 1; s <= 8; ++s) b.push(s, std::vector<StateArray>(5, f));
  const StateArray a = aggregate_action(b, 8, 0.2);
  for (std::size_t c = 0; c < kStateDim; ++c) EXPECT_NEAR(a[c], f[c], 1e-15);
}

TEST(AggregateAction, EmptyBufferThrows) {
  AggregationBuffer b(3);
  EXPECT_THROW(aggregate_action(b, 1, 0.1), Error);
}

// Index mapping over a 3n x 3n grid: every (n, t) with t up to 3n.
TEST(AggregateAction, MatchesIndexFormulaOnGrid) {
  Rng rng(6);
  for (int n = 1; n <= 12; ++n) {
    for (double kappa : {0.0, 0.01, 0.7}) {
      std::vector<std::vector<StateArray>> hist;
      AggregationBuffer b(n);
      for (long t = 1; t <= 3 * n; ++t) {
        hist.push_back(random_sequence(n, rng));
        b.push(t, hist.back());
        const StateArray got = aggregate_action(b, t, kappa, false);
        const StateArray want = oracle(hist, t, n, kappa);
        for (std::size_t c = 0; c < kStateDim; ++c) {
          ASSERT_NEAR(got[c], want[c], 1e-12) << "n " << n << " t " << t << " c " << c;
        }
      }
    }
  }
}

TEST(AggregateAction, RandomEpisodesMatchOracleAndStayInHull) {
  Rng rng(7);
  for (int episode = 0; episode < 100; ++episode) {
    const int n = 1 + static_cast<int>(rng.below(30));
    const double kappa = rng.uniform(0, 0.5);
    std::vector<std::vector<StateArray>> hist;
    AggregationBuffer b(n);
    const long steps = 1 + static_cast<long>(rng.below(80));
    for (long t = 1; t <= steps; ++t) {
      hist.push_back(random_sequence(n, rng));
      b.push(t, hist.back());
      const StateArray raw = aggregate_action(b, t, kappa, false);
      const StateArray want = oracle(hist, t, n, kappa);
      for (std::size_t c = 0; c < kStateDim; ++c) ASSERT_NEAR(raw[c], want[c], 1e-12);
      // Convex hull of the contributing (hemisphere-aligned) frames.
      const StateArray& ref = hist[t - 1][0];
      for (std::size_t c = 0; c < kStateDim; ++c) {
        double lo = INFINITY, hi = -INFINITY;
        for (long s = std::max(1L, t - n + 1); s <= t; ++s) {
          const StateArray& f = hist[s - 1][t - s];
          const double dot = f[6] * ref[6] + f[7] * ref[7] + f[8] * ref[8] + f[9] * ref[9];
          const double v = (c >= 6 && c < 10 && dot < 0) ? -f[c] : f[c];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        EXPECT_GE(raw[c], lo - 1e-12);
        EXPECT_LE(raw[c], hi + 1e-12);
      }
      const StateArray a = aggregate_action(b, t, kappa);
      EXPECT_NEAR(std::sqrt(a[6] * a[6] + a[7] * a[7] + a[8] * a[8] + a[9] * a[9]), 1.0, 1e-12);
    }
  }
}

TEST(AggregateAction, OppositeHemispheresDoNotCancel) {
  AggregationBuffer b(2);
  StateArray f{};
  f[6] = 1.0;
  StateArray g = f;
  g[6] = -1.0;
  b.push(1, {f, f});
  b.push(2, {g, g});
  const StateArray a = aggregate_action(b, 2, 0.0);
  EXPECT_DOUBLE_EQ(a[6], -1.0);
}

TEST(AggregationConfig, RejectsNegativeKappa) {
  AggregationConfig c;
  c.kappa = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace ilsrd
