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

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ilsrd/dataset.hpp"
#include "ilsrd/mpc_expert.hpp"
#include "ilsrd/noise.hpp"
#include "ilsrd/random.hpp"

using namespace ilsrd;
using namespace ilsrd::mpc;

namespace {

constexpr std::uint64_t kStandardSeeds[] = {101, 202, 303, 404, 505};

RelativeState at_target(const TargetState& t) { return t.as_state(); }

ControlSequence zeros(int n) { return ControlSequence(n); }

// Closed-loop noiseless record shared by the episode-level properties.
struct Episode {
  std::vector<RelativeState> states;
  std::vector<ControlInput> controls;
  std::vector<std::vector<double>> cost_histories;
  long flagged = 0;
};

const Episode& noiseless_episode(std::uint64_t seed) {
  static std::map<std::uint64_t, Episode> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  Problem pb;
  MpcController ctl(pb);
  Episode ep;
  RelativeState s = sample_initial_state(seed, pb.orbit);
  ep.states.push_back(s);
  for (int t = 0; t < 2500; ++t) {
    const ControlInput u = ctl.step(s);
    ep.controls.push_back(u);
    ep.cost_histories.push_back(ctl.last_result().cost_history);
    s = rk4_step(s, u, pb.orbit, pb.params);
    ep.states.push_back(s);
  }
  ep.flagged = ctl.flagged_steps();
  return cache.emplace(seed, std::move(ep)).first->second;
}

}  // namespace

TEST(ErrorVector, ZeroAtTarget) {
  const TargetState tgt;
  EXPECT_EQ(error_vector(at_target(tgt), tgt).norm(), 0.0);
}

TEST(ErrorVector, DoubleCoverGivesZero) {
  TargetState tgt;
  tgt.q_hat = Quaternion::from_axis_angle(Vec3(1, 2, 3).normalized(), 0.7);
  RelativeState s = at_target(tgt);
  s.q = -tgt.q_hat;
  EXPECT_NEAR(error_vector(s, tgt).norm(), 0.0, 1e-15);
}

TEST(ErrorVector, PositionBlock) {
  const TargetState tgt;
  RelativeState s = at_target(tgt);
  s.r += Vec3(1, 0, 0);
  const ErrorVector e = error_vector(s, tgt);
  EXPECT_EQ(e.head<3>(), Vec3(1, 0, 0));
  EXPECT_EQ(e.tail<10>().norm(), 0.0);
}

TEST(ErrorVector, AttitudeBlockIsDeviationFromIdentity) {
  const TargetState tgt;
  RelativeState s = at_target(tgt);
  s.q = Quaternion::from_axis_angle(Vec3::UnitZ(), 0.2);
  const ErrorVector e = error_vector(s, tgt);
  EXPECT_NEAR(e[6], 1.0 - std::cos(0.1), 1e-15);
  EXPECT_NEAR(e[9], std::sin(0.1), 1e-15);
}

TEST(MpcConfig, Validation) {
  MpcConfig c;
  EXPECT_NO_THROW(c.validate());
  c.control_horizon = 31;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.R[2] = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.Q[0] = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.u_min[4] = c.u_max[4];
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrajectoryCost, ZeroAtTarget) {
  Problem pb;
  EXPECT_EQ(trajectory_cost(at_target(pb.target), zeros(pb.cfg.control_horizon), pb), 0.0);
}

TEST(TrajectoryCost, SingleStageFormula) {
  Problem pb;
  pb.cfg.prediction_horizon = 1;
  pb.cfg.control_horizon = 1;
  pb.cfg.Q = StateWeights::Ones();
  pb.cfg.R = ControlWeights::Ones();
  pb.cfg.P = StateWeights::Constant(3.0);
  RelativeState s0 = at_target(pb.target);
  s0.r += Vec3(0.5, -0.25, 1.0);
  s0.v = Vec3(0.1, 0.0, -0.2);
  s0.omega = Vec3(0.01, 0.02, 0.03);
  s0.q = Quaternion::from_axis_angle(Vec3::UnitX(), 0.3);
  const ControlInput u{Vec3(0.1, -0.05, 0.02), Vec3(1.0, -2.0, 0.5)};
  const RelativeState s1 = rk4_step(s0, u, pb.orbit, pb.params);
  const ErrorVector e0 = error_vector(s0, pb.target);
  const ErrorVector e1 = error_vector(s1, pb.target);
  Eigen::Matrix<double, 6, 1> uv;
  uv << u.f, u.tau;
  const double expected = e0.squaredNorm() + uv.squaredNorm() + 3.0 * e1.squaredNorm();
  EXPECT_NEAR(trajectory_cost(s0, {u}, pb), expected, 1e-12 * expected);
}

TEST(TrajectoryCost, LinearInQ) {
  Problem pb;
  Rng rng(9);
  const RelativeState s0 = sample_initial_state(3, pb.orbit);
  ControlSequence u(pb.cfg.control_horizon);
  for (auto& c : u) {
    c.f = Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
    c.tau = Vec3(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8));
  }
  Problem zero_q = pb;
  zero_q.cfg.Q.setZero();
  const double rest = trajectory_cost(s0, u, zero_q);
  const double state_part = trajectory_cost(s0, u, pb) - rest;
  Problem scaled = pb;
  scaled.cfg.Q *= 3.0;
  EXPECT_NEAR(trajectory_cost(s0, u, scaled) - rest, 3.0 * state_part, 1e-9 * state_part);
}

TEST(TrajectoryCost, WrongLengthRejected) {
  Problem pb;
  EXPECT_THROW(trajectory_cost(at_target(pb.target), zeros(3), pb), Error);
}

TEST(TrajectoryCost, DivergedHorizonReported) {
  Problem pb;
  RelativeState s0 = at_target(pb.target);
  s0.omega = Vec3(1e300, 1e300, 1e300);
  try {
    trajectory_cost(s0, zeros(pb.cfg.control_horizon), pb);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "horizon diverged");
  }
}

TEST(SqpSolver, ZeroControlAtTarget) {
  Problem pb;
  const SolveResult r = SqpSolver(pb).solve(at_target(pb.target), {});
  for (const auto& u : r.u) {
    for (double c : u.to_array()) EXPECT_LE(std::abs(c), 1e-6);
  }
  EXPECT_FALSE(r.flagged);
}

// With n0 = 0 and no rotation the translational problem is a linear-quadratic
// program. The oracle below solves its KKT system with states as explicit
// decision variables.
TEST(SqpSolver, MatchesEqualityConstrainedQpOracle) {
  Problem pb;
  pb.orbit.mu = 1e-300;
  pb.cfg.prediction_horizon = 12;
  pb.cfg.control_horizon = 4;
  pb.cfg.sqp_iters = 6;
  const int np = pb.cfg.prediction_horizon;
  const int nc = pb.cfg.control_horizon;
  const double dt = pb.orbit.dt;

  RelativeState s0 = at_target(pb.target);
  s0.r += Vec3(0.3, -0.2, 0.1);
  s0.v = Vec3(0.01, 0.0, -0.02);

  // z = [x_1 .. x_Np (6 each: dr, v), f_0 .. f_{Nc-1} (3 each)].
  const int nx = 6 * np;
  const int nz = nx + 3 * nc;
  const int neq = 6 * np;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nz, nz);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(neq, nz);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(neq);
  const Vec3 qr = pb.cfg.Q.head<3>(), qv = pb.cfg.Q.segment<3>(3);
  const Vec3 pr = pb.cfg.P.head<3>(), pv = pb.cfg.P.segment<3>(3);
  const Vec3 rf = pb.cfg.R.head<3>();
  for (int t = 1; t <= np; ++t) {
    const int o = 6 * (t - 1);
    for (int i = 0; i < 3; ++i) {
      H(o + i, o + i) = 2 * (t < np ? qr[i] : pr[i]);
      H(o + 3 + i, o + 3 + i) = 2 * (t < np ? qv[i] : pv[i]);
    }
  }
  for (int t = 0; t < np; ++t) {
    const int k = std::min(t, nc - 1);
    for (int i = 0; i < 3; ++i) H(nx + 3 * k + i, nx + 3 * k + i) += 2 * rf[i];
  }
  // x_{t+1} = F x_t + G f_t with exact double-integrator discretisation.
  Eigen::Matrix<double, 6, 6> F = Eigen::Matrix<double, 6, 6>::Identity();
  F.topRightCorner<3, 3>() = dt * Mat3::Identity();
  Eigen::Matrix<double, 6, 3> G;
  G << 0.5 * dt * dt * Mat3::Identity(), dt * Mat3::Identity();
  Eigen::Matrix<double, 6, 1> x0;
  x0 << s0.r - pb.target.r_hat, s0.v;
  for (int t = 0; t < np; ++t) {
    const int row = 6 * t;
    const int k = std::min(t, nc - 1);
    A.block<6, 6>(row, 6 * t) = Eigen::Matrix<double, 6, 6>::Identity();
    if (t > 0) {
      A.block<6, 6>(row, 6 * (t - 1)) = -F;
    } else {
      b.segment<6>(row) = F * x0;
    }
    A.block<6, 3>(row, nx + 3 * k) = -G;
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nz + neq, nz + neq);
  K.topLeftCorner(nz, nz) = H;
  K.topRightCorner(nz, neq) = A.transpose();
  K.bottomLeftCorner(neq, nz) = A;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nz + neq);
  rhs.tail(neq) = b;
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);

  const SolveResult r = SqpSolver(pb).solve(s0, {});
  ASSERT_EQ(static_cast<int>(r.u.size()), nc);
  for (int k = 0; k < nc; ++k) {
    for (int i = 0; i < 3; ++i) {
      const double oracle = sol[nx + 3 * k + i];
      ASSERT_LT(std::abs(oracle), 0.2) << "oracle must lie inside the box";
      EXPECT_NEAR(r.u[k].f[i], oracle, 1e-4) << "k=" << k << " i=" << i;
      EXPECT_NEAR(r.u[k].tau[i], 0.0, 1e-4);
    }
  }
}

TEST(SqpSolver, CostNonIncreasingFromRandomStarts) {
  Problem pb;
  pb.cfg.sqp_iters = 8;
  const SqpSolver solver(pb);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SolveResult r = solver.solve(sample_initial_state(seed, pb.orbit), {});
    ASSERT_GE(r.cost_history.size(), 2u);
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) {
      EXPECT_LE(r.cost_history[i], r.cost_history[i - 1]) << "seed " << seed;
    }
    EXPECT_LT(r.cost_history.back(), r.cost_history.front());
  }
}

TEST(SqpSolver, BoxRespectedExactly) {
  Problem pb;
  pb.cfg.u_min = {-0.05, -0.05, -0.05, -1, -1, -1};
  pb.cfg.u_max = {0.05, 0.05, 0.05, 1, 1, 1};
  const SolveResult r = SqpSolver(pb).solve(sample_initial_state(4, pb.orbit), {});
  bool any_active = false;
  for (const auto& u : r.u) {
    const auto a = u.to_array();
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_GE(a[i], pb.cfg.u_min[i]);
      EXPECT_LE(a[i], pb.cfg.u_max[i]);
      any_active |= a[i] == pb.cfg.u_min[i] || a[i] == pb.cfg.u_max[i];
    }
  }
  EXPECT_TRUE(any_active);
}

TEST(MpcController, NearZeroAtTarget) {
  Problem pb;
  MpcController ctl(pb);
  const ControlInput u = ctl.step(at_target(pb.target));
  for (double c : u.to_array()) EXPECT_LE(std::abs(c), 1e-6);
}

TEST(MpcController, Deterministic) {
  Problem pb;
  const RelativeState s = sample_initial_state(17, pb.orbit);
  MpcController a(pb), b(pb);
  for (int i = 0; i < 5; ++i) {
    const auto ua = a.step(s).to_array();
    const auto ub = b.step(s).to_array();
    EXPECT_EQ(ua, ub);
  }
  EXPECT_EQ(a.steps(), 5);
}

TEST(MpcController, WarmStartIsShifted) {
  Problem pb;
  MpcController ctl(pb);
  const RelativeState s = sample_initial_state(5, pb.orbit);
  ctl.step(s);
  const ControlSequence first = ctl.last_result().u;
  ctl.reset();
  EXPECT_NO_THROW(ctl.step(s));
  EXPECT_EQ(ctl.last_result().u.front().to_array(), first.front().to_array());
}

TEST(ClosedLoop, ControlsInsideBoundsEveryStep) {
  const Problem pb;
  for (std::uint64_t seed : kStandardSeeds) {
    const Episode& ep = noiseless_episode(seed);
    for (const auto& u : ep.controls) {
      const auto a = u.to_array();
      for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_GE(a[i], pb.cfg.u_min[i]);
        ASSERT_LE(a[i], pb.cfg.u_max[i]);
      }
    }
  }
}

TEST(ClosedLoop, SqpCostNonIncreasingEveryStep) {
  for (std::uint64_t seed : kStandardSeeds) {
    const Episode& ep = noiseless_episode(seed);
    for (const auto& h : ep.cost_histories) {
      for (std::size_t i = 1; i < h.size(); ++i) ASSERT_LE(h[i], h[i - 1]);
    }
    EXPECT_LE(ep.flagged, 2500 / 20) << "seed " << seed;
  }
}

TEST(ClosedLoop, ErrorNonIncreasingOverWindowsAfterStep500) {
  const Problem pb;
  for (std::uint64_t seed : kStandardSeeds) {
    const Episode& ep = noiseless_episode(seed);
    std::vector<double> e(ep.states.size());
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = error_vector(ep.states[t], pb.target).norm();
    // Once converged the error sits at double-precision round-off.
    constexpr double kFloor = 1e-12;
    for (std::size_t t = 500; t + 200 < e.size(); ++t) {
      ASSERT_LE(e[t + 200], e[t] + kFloor) << "seed " << seed << " t " << t;
    }
  }
}

TEST(ClosedLoop, NoiselessTerminalAccuracy) {
  const Problem pb;
  for (std::uint64_t seed : kStandardSeeds) {
    const RelativeState& s = noiseless_episode(seed).states.back();
    EXPECT_LT((s.r - pb.target.r_hat).norm(), 0.1) << "seed " << seed;
    EXPECT_LT(quat_error_angle(s.q, pb.target.q_hat), 0.01) << "seed " << seed;
    EXPECT_GT(std::abs(s.q.w), 0.999) << "seed " << seed;
  }
}

TEST(InjectNoise, ZeroStdLeavesStateUnchanged) {
  Rng rng(3);
  const RelativeState s = sample_initial_state(8, OrbitConfig{});
  NoiseConfig cfg = NoiseConfig::demonstration();
  cfg.sigma_r = cfg.sigma_v = cfg.sigma_omega = cfg.sigma_att_deg = 0;
  EXPECT_EQ(inject_noise(s, cfg, rng).to_array(), s.to_array());
  EXPECT_EQ(inject_noise(s, NoiseConfig::off(), rng).to_array(), s.to_array());
}

TEST(InjectNoise, UnitQuaternion) {
  Rng rng(4);
  const RelativeState s = sample_initial_state(8, OrbitConfig{});
  for (int i = 0; i < 1000; ++i) {
    EXPECT_NEAR(inject_noise(s, NoiseConfig::robustness(), rng).q.norm(), 1.0, 1e-12);
  }
}

TEST(InjectNoise, MonteCarloMeanOfPosition) {
  Rng rng(5);
  const RelativeState s = sample_initial_state(8, OrbitConfig{});
  const NoiseConfig cfg = NoiseConfig::demonstration();
  constexpr int kN = 100000;
  Vec3 mean = Vec3::Zero();
  for (int i = 0; i < kN; ++i) mean += inject_noise(s, cfg, rng).r;
  mean /= kN;
  const double bound = 3.0 * cfg.sigma_r / std::sqrt(static_cast<double>(kN));
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(mean[i] - s.r[i]), bound);
}

TEST(InjectNoise, NegativeStdRejected) {
  NoiseConfig cfg = NoiseConfig::demonstration();
  cfg.sigma_v = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RunExpert, RecordsConsistentLengths) {
  Problem pb;
  Rng rng(11);
  const Demonstration d =
      run_expert(sample_initial_state(1, pb.orbit), 40, pb, NoiseConfig::demonstration(), rng);
  EXPECT_EQ(d.length(), 40u);
  EXPECT_EQ(d.true_states.size(), 41u);
  EXPECT_EQ(d.observed_states.size(), 41u);
  EXPECT_NE(d.true_states[3].to_array(), d.observed_states[3].to_array());
  EXPECT_NO_THROW(d.validate());
}
