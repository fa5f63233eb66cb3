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

#include "ilsrd/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace ilsrd {
namespace {

// Commands exactly the state it observes.
class EchoPolicy : public Policy {
 public:
  std::string name() const override { return "echo"; }
  ExecutionMode mode() const override { return ExecutionMode::kCommandedState; }
  RelativeState command(const RelativeState& s) override { return s; }
};

// Emits a fixed wrench profile u(t).
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::function<ControlInput(long)> u) : u_(std::move(u)) {}
  std::string name() const override { return "scripted"; }
  ExecutionMode mode() const override { return ExecutionMode::kWrench; }
  void reset() override { t_ = 0; }
  ControlInput wrench(const RelativeState&) override { return u_(t_++); }

 private:
  std::function<ControlInput(long)> u_;
  long t_ = 0;
};

RelativeState random_state(Rng& rng) {
  RelativeState s;
  s.r = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
  s.v = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  s.q = rng.uniform_quaternion();
  s.omega = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  return s;
}

EpisodeRecord random_record(Rng& rng, long steps) {
  EpisodeRecord rec;
  rec.mode = ExecutionMode::kCommandedState;
  for (long t = 0; t <= steps; ++t) rec.states.push_back(random_state(rng));
  rec.observed.assign(rec.states.begin(), rec.states.end() - 1);
  return rec;
}

// acos form of the geodesic angle, independent of the library helper.
double alpha(const Quaternion& a, const Quaternion& b) {
  return 2.0 * std::acos(std::min(1.0, std::abs(a.dot(b))));
}

double oracle_error(const RelativeState& s, const RelativeState& ref) {
  const double a = alpha(s.q, ref.q);
  double dr = 0, dv = 0, dw = 0;
  for (int i = 0; i < 3; ++i) {
    dr += (s.r[i] - ref.r[i]) * (s.r[i] - ref.r[i]);
    dv += (s.v[i] - ref.v[i]) * (s.v[i] - ref.v[i]);
    dw += (s.omega[i] - ref.omega[i]) * (s.omega[i] - ref.omega[i]);
  }
  return std::sqrt(dr) + std::sqrt(dv) + a * a + std::sqrt(dw);
}

TEST(RunEpisode, EchoPolicyHoldsStateWithZeroEnergy) {
  const mpc::Problem pb;
  Rng init(1);
  const RelativeState s0 = random_state(init);
  EchoPolicy echo;
  Rng rng(2);
  const EpisodeRecord rec = run_episode(echo, s0, 200, NoiseConfig::off(), rng, pb);
  ASSERT_EQ(rec.states.size(), 201u);
  for (const auto& s : rec.states) EXPECT_EQ(s.to_array(), s0.to_array());
  const EpisodeMetrics m = compute_metrics(rec, pb);
  // q^-1 q carries roundoff in its vector part.
  EXPECT_NEAR(m.sec, 0.0, 1e-15);
  EXPECT_NEAR(m.esr, -step_error(s0, pb.target.as_state()), 1e-12);
  EXPECT_EQ(m.cs, 1);
}

TEST(RunEpisode, FullLengthDeterministicAndNoiseFree) {
  const mpc::Problem pb;
  const RelativeState s0 = sample_initial_state(101, pb.orbit);
  PidPolicy a(PidConfig{}, pb.target), b(PidConfig{}, pb.target);
  Rng r1(3), r2(4);
  const EpisodeRecord x = run_episode(a, s0, 2500, NoiseConfig::off(), r1, pb);
  const EpisodeRecord y = run_episode(b, s0, 2500, NoiseConfig::off(), r2, pb);
  EXPECT_EQ(x.steps(), 2500);
  EXPECT_EQ(x.states.size(), 2501u);
  EXPECT_EQ(x.controls.size(), 2500u);
  EXPECT_FALSE(x.diverged);
  for (std::size_t t = 0; t < x.states.size(); ++t) {
    ASSERT_EQ(x.states[t].to_array(), y.states[t].to_array());
  }
  for (std::size_t t = 0; t < x.observed.size(); ++t) {
    const StateArray o = x.observed[t].to_array(), s = x.states[t].to_array();
    ASSERT_EQ(std::memcmp(o.data(), s.data(), sizeof(o)), 0);
  }
}

TEST(RunEpisode, NonFiniteCommandFlagsDivergence) {
  class Blowup : public EchoPolicy {
   public:
    RelativeState command(const RelativeState& s) override {
      RelativeState n = s;
      if (++k_ > 30) n.r.x() = std::nan("");
      return n;
    }
    int k_ = 0;
  } policy;
  const mpc::Problem pb;
  Rng rng(1);
  const EpisodeRecord rec = run_episode(policy, pb.target.as_state(), 100, NoiseConfig::off(), rng, pb);
  EXPECT_TRUE(rec.diverged);
  EXPECT_EQ(rec.steps(), 30);
  EXPECT_EQ(rec.observed.size(), 30u);
}

TEST(ReconstructWrench, RestStateGivesZero) {
  const mpc::Problem pb;
  EpisodeRecord rec;
  RelativeState s;
  s.r = Vec3(7.0, 0, 0);
  rec.states.assign(10, s);
  const WrenchSeries w = reconstruct_wrench(rec, pb);
  ASSERT_EQ(w.index.size(), 8u);
  EXPECT_EQ(w.index.front(), 1);
  EXPECT_EQ(w.index.back(), 8);
  for (std::size_t k = 0; k < w.index.size(); ++k) {
    EXPECT_EQ(w.force[k].norm(), 0.0);
    EXPECT_EQ(w.torque[k].norm(), 0.0);
  }
  rec.states.resize(2);
  EXPECT_THROW(reconstruct_wrench(rec, pb), Error);
}

TEST(ReconstructWrench, PrincipalAxisSpinNeedsNoTorque) {
  const mpc::Problem pb;
  RelativeState s;
  s.r = Vec3(2, 0, 0);
  s.omega = Vec3(0, 0, 0.3);
  EpisodeRecord rec;
  rec.states.push_back(s);
  for (int k = 0; k < 50; ++k) rec.states.push_back(rk4_step(rec.states.back(), {}, pb.orbit, pb.params));
  const WrenchSeries w = reconstruct_wrench(rec, pb);
  for (const Vec3& t : w.torque) EXPECT_LT(t.norm(), 1e-12);
}

TEST(ReconstructWrench, RecoversForwardSimulatedControls) {
  const mpc::Problem pb;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    RelativeState s0 = random_state(rng);
    s0.omega *= 0.2;
    const Vec3 f0(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
    // Central differences lose accuracy at high spin rates; keep |w| below ~1 rad/s.
    const Vec3 t0(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const bool smooth = trial % 2 == 1;
    auto profile = [&](long t) {
      ControlInput u;
      const double g = smooth ? std::cos(0.02 * t) : 1.0;
      u.f = g * f0;
      u.tau = g * t0;
      return u;
    };
    ScriptedPolicy policy(profile);
    Rng nr(0);
    const EpisodeRecord rec = run_episode(policy, s0, 60, NoiseConfig::off(), nr, pb);
    const WrenchSeries w = reconstruct_wrench(rec, pb);
    for (std::size_t k = 0; k < w.index.size(); ++k) {
      const ControlInput u = rec.controls[w.index[k]];
      const ControlInput prev = rec.controls[w.index[k] - 1];
      // The central difference at t straddles the controls applied at t-1 and t.
      const Vec3 f_mid = 0.5 * (u.f + prev.f), t_mid = 0.5 * (u.tau + prev.tau);
      ASSERT_LT((w.force[k] / pb.params.mass() - f_mid).cwiseAbs().maxCoeff(), 1e-3) << trial;
      ASSERT_LT((w.torque[k] - t_mid).cwiseAbs().maxCoeff(), 1e-3) << trial;
    }
  }
}

TEST(EpisodeEnergy, MotionlessIsZero) {
  EpisodeRecord rec;
  rec.states.assign(30, RelativeState{});
  WrenchSeries w;
  for (long t = 0; t < 29; ++t) {
    w.index.push_back(t);
    w.force.push_back(Vec3(3, 1, 2));
    w.torque.push_back(Vec3(1, 1, 1));
  }
  const Energy e = episode_energy(rec, w);
  EXPECT_EQ(e.w_force, 0.0);
  EXPECT_EQ(e.w_torque, 0.0);
  EXPECT_EQ(e.sec, 0.0);
}

TEST(EpisodeEnergy, ConstantForceOverMonotoneMotion) {
  EpisodeRecord rec;
  Rng rng(6);
  RelativeState s;
  double x = 0;
  for (int t = 0; t <= 2500; ++t) {
    s.r.x() = x;
    rec.states.push_back(s);
    x += rng.uniform(0, 0.3);
  }
  const double d = rec.states.back().r.x() - rec.states.front().r.x();
  WrenchSeries w;
  for (long t = 0; t < 2500; ++t) {
    w.index.push_back(t);
    w.force.push_back(Vec3(-4.0, 0, 0));
    w.torque.push_back(Vec3::Zero());
  }
  const Energy e = episode_energy(rec, w);
  EXPECT_NEAR(e.w_force, 4.0 * d, 1e-9);
  EXPECT_EQ(e.sec, (e.w_force + e.w_torque) / 2500);
}

TEST(EpisodeEnergy, TorqueWorkUsesIncrementalRotation) {
  EpisodeRecord rec;
  RelativeState s;
  for (int t = 0; t <= 10; ++t) {
    s.q = Quaternion::from_axis_angle(Vec3::UnitZ(), 0.05 * t);
    rec.states.push_back(s);
  }
  WrenchSeries w;
  for (long t = 0; t < 10; ++t) {
    w.index.push_back(t);
    w.force.push_back(Vec3::Zero());
    w.torque.push_back(Vec3(0, 0, 2.0));
  }
  EXPECT_NEAR(episode_energy(rec, w).w_torque, 2.0 * 0.5, 1e-12);
}

TEST(ConvergenceStep, ConstantTrajectoryIsOne) {
  EpisodeRecord rec;
  rec.states.assign(101, RelativeState{});
  EXPECT_EQ(convergence_step(rec), 1);
}

TEST(ConvergenceStep, StrictlyDecreasingErrorPicksLastWindow) {
  for (long n : {20L, 21L, 57L, 2500L}) {
    EpisodeRecord rec;
    for (long t = 0; t <= n; ++t) {
      RelativeState s;
      s.r.x() = 0.5 * static_cast<double>(n - t);
      rec.states.push_back(s);
    }
    EXPECT_EQ(convergence_step(rec), n - 19) << n;
  }
}

TEST(ConvergenceStep, ZeroErrorFromStepKOnward) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const long n = 40 + static_cast<long>(rng.below(200));
    const long k = 1 + static_cast<long>(rng.below(n - 19));
    EpisodeRecord rec = random_record(rng, n);
    for (long t = k; t <= n; ++t) rec.states[t] = rec.states[n];
    EXPECT_LE(convergence_step(rec), k);
  }
  EpisodeRecord short_rec;
  short_rec.states.assign(19, RelativeState{});
  EXPECT_THROW(convergence_step(short_rec), Error);
}

TEST(TerminalPrecision, Examples) {
  const mpc::TargetState target;
  EpisodeRecord rec;
  rec.states = {RelativeState{}, target.as_state()};
  Precision p = terminal_precision(rec, target);
  EXPECT_EQ(p.ttp, 0.0);
  EXPECT_EQ(p.trp, 0.0);

  RelativeState f = target.as_state();
  f.r += Vec3::UnitX();
  rec.states.back() = f;
  EXPECT_DOUBLE_EQ(terminal_precision(rec, target).ttp, 1.0);

  f = target.as_state();
  f.q = Quaternion::from_axis_angle(Vec3::UnitX(), std::numbers::pi / 2);
  rec.states.back() = f;
  p = terminal_precision(rec, target);
  EXPECT_NEAR(p.trp, std::numbers::pi * std::numbers::pi / 4, 1e-12);
  EXPECT_NEAR(p.trp, 2.4674, 1e-4);
}

TEST(Esr, Examples) {
  const mpc::TargetState target;
  EpisodeRecord rec;
  rec.states.assign(51, target.as_state());
  EXPECT_EQ(episodic_stepwise_reward(rec, target), 0.0);
  for (auto& s : rec.states) s.r += Vec3::UnitY();
  EXPECT_DOUBLE_EQ(episodic_stepwise_reward(rec, target), -1.0);
}

// Metric operations against brute-force re-implementations on random episodes.
TEST(MetricOracles, RandomEpisodes) {
  const mpc::TargetState target;
  Rng rng(8);
  for (int episode = 0; episode < 100; ++episode) {
    const long n = 20 + static_cast<long>(rng.below(300));
    const EpisodeRecord rec = random_record(rng, n);

    double sum = 0;
    for (long t = 1; t <= n; ++t) sum += oracle_error(rec.states[t], target.as_state());
    EXPECT_NEAR(episodic_stepwise_reward(rec, target), -sum / n, 1e-12);

    const RelativeState& f = rec.states[n];
    const double a = alpha(f.q, target.q_hat);
    const Precision p = terminal_precision(rec, target);
    EXPECT_NEAR(p.ttp, (f.r - target.r_hat).norm() + f.v.norm(), 1e-12);
    EXPECT_NEAR(p.trp, a * a + f.omega.norm(), 1e-12);

    long best = -1;
    double best_mean = 0;
    for (long start = 1; start <= n - 19; ++start) {
      double w = 0;
      for (long k = start; k < start + 20; ++k) w += oracle_error(rec.states[k], f);
      if (best < 0 || w / 20 < best_mean) {
        best = start;
        best_mean = w / 20;
      }
    }
    EXPECT_EQ(convergence_step(rec), best);
  }
}

class SuiteTest : public ::testing::Test {
 protected:
  static std::vector<PolicyEntry> entries(const mpc::Problem& pb) {
    return {{"pid", [pb] { return std::make_unique<PidPolicy>(PidConfig{}, pb.target); }, ""},
            {"echo", [] { return std::make_unique<EchoPolicy>(); }, ""},
            {"bc", nullptr, "missing checkpoint: bc.ckpt"}};
  }
};

TEST_F(SuiteTest, DeterministicWithFiveEpisodesPerRow) {
  const mpc::Problem pb;
  SuiteConfig cfg;
  cfg.steps = 300;
  const auto a = evaluate_suite(entries(pb), cfg, pb);
  cfg.jobs = 3;
  const auto b = evaluate_suite(entries(pb), cfg, pb);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
  for (const auto& r : a) {
    if (r.policy == "bc") {
      EXPECT_EQ(r.skipped, "missing checkpoint: bc.ckpt");
      EXPECT_TRUE(r.episodes.empty());
    } else {
      ASSERT_EQ(r.episodes.size(), 5u);
      for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.episodes[i].seed, kStandardSeeds[i]);
    }
  }
  const auto j = report_to_json(a);
  EXPECT_EQ(j["rows"][0]["attp"]["mean"].get<double>(), a[0].ttp.mean);
}

TEST_F(SuiteTest, NoiseIsSharedAcrossPolicies) {
  const mpc::Problem pb;
  SuiteConfig cfg;
  cfg.steps = 25;
  cfg.seeds = {101};
  cfg.conditions = {{"disturbed", NoiseConfig::robustness(), 1}};
  std::vector<EpisodeRecord> seen;
  evaluate_suite({{"e1", [] { return std::make_unique<EchoPolicy>(); }, ""},
                  {"e2", [] { return std::make_unique<EchoPolicy>(); }, ""}},
                 cfg, pb, [&](const std::string&, const EpisodeRecord& r) { seen.push_back(r); });
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0].observed[7].to_array(), seen[1].observed[7].to_array());
  EXPECT_NE(seen[0].observed[7].to_array(), seen[0].states[7].to_array());
}

TEST(Suite, NoiselessMpcReachesTarget) {
  const mpc::Problem pb;
  SuiteConfig cfg;
  cfg.conditions = {{"nominal", NoiseConfig::off(), 0}};
  const auto rows = evaluate_suite(
      {{"mpc", [pb] { return std::make_unique<MpcPolicy>(pb); }, ""}}, cfg, pb);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LT(rows[0].ttp.mean, 0.1);
  EXPECT_LT(rows[0].trp.mean, 0.01);
  for (const auto& e : rows[0].episodes) EXPECT_FALSE(e.diverged);
}

TEST(EpisodeCsv, OneRowPerState) {
  const mpc::Problem pb;
  PidPolicy pid(PidConfig{}, pb.target);
  Rng rng(1);
  const EpisodeRecord rec =
      run_episode(pid, sample_initial_state(202, pb.orbit), 40, NoiseConfig::off(), rng, pb);
  const auto path = std::filesystem::temp_directory_path() / "ilsrd_episode_test.csv";
  write_episode_csv(path, rec, pb);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 12), "t,true_rx,tr");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 41);
  std::filesystem::remove(path);
}

TEST(Ablation, DefaultVariants) {
  const auto v = default_ablations();
  std::vector<std::string> names;
  for (const auto& a : v) names.push_back(a.name);
  EXPECT_EQ(names, (std::vector<std::string>{"IL-SRD", "n=100", "n=200", "n=400", "n=600",
                                             "zero decoder target", "learnable decoder target",
                                             "w/o temporal aggregation"}));
  EXPECT_FALSE(v.back().temporal_aggregation);
}

}  // namespace
}  // namespace ilsrd
