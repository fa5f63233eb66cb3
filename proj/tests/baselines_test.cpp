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

#include "ilsrd/baselines.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ilsrd/il_srd.hpp"

namespace ilsrd {
namespace {

using ad::Tape;

const std::uint64_t kSeeds[] = {101, 202, 303, 404, 505};

Demonstration synthetic_demo(int steps, double phase) {
  Demonstration d;
  for (int k = 0; k <= steps; ++k) {
    const double s = 0.05 * k + phase;
    RelativeState x;
    x.r = Vec3(10 * std::cos(s), 5 * std::sin(s), 2 + std::sin(2 * s));
    x.v = Vec3(-0.5 * std::sin(s), 0.25 * std::cos(s), 0.1 * std::cos(2 * s));
    x.q = Quaternion{std::cos(0.3 * s), 0.2 * std::sin(s), 0.1, 0.3 * std::cos(s)}.normalized();
    x.omega = Vec3(0.01 * std::sin(s), 0.02 * std::cos(s), 0.005 * s);
    d.true_states.push_back(x);
    d.observed_states.push_back(x);
    if (k < steps) d.controls.push_back(ControlInput{});
  }
  return d;
}

TEST(LowPass2, UnitDcGain) {
  LowPass2 f(5.0, 0.7, 0.1);
  double y = 0;
  for (int k = 0; k < 400; ++k) y = f.step(1.0);
  EXPECT_NEAR(y, 1.0, 1e-12);
}

TEST(LowPass2, ImpulseResponseDecays) {
  for (double cutoff : {0.5, 5.0, 30.0, 300.0}) {
    LowPass2 f(cutoff, 0.7, 0.1);
    double peak = std::abs(f.step(1.0));
    double tail = 0;
    for (int k = 1; k < 2000; ++k) {
      const double y = std::abs(f.step(0.0));
      peak = std::max(peak, y);
      if (k >= 1900) tail = std::max(tail, y);
    }
    EXPECT_LT(peak, 2.0) << cutoff;
    EXPECT_LT(tail, 1e-6) << cutoff;
  }
}

TEST(Pid, ZeroWrenchAtTarget) {
  mpc::TargetState target;
  PidController pid(PidConfig{}, target);
  for (int k = 0; k < 50; ++k) {
    const ControlInput u = pid.step(target.as_state());
    EXPECT_EQ(u.f, Vec3::Zero());
    EXPECT_EQ(u.tau, Vec3::Zero());
  }
}

TEST(Pid, HugeErrorSaturates) {
  mpc::TargetState target;
  PidController pid(PidConfig{}, target);
  RelativeState s;
  s.r = Vec3(1e5, -1e5, 1e5);
  const ControlInput u = pid.step(s);
  EXPECT_EQ(u.f, Vec3(-0.2, 0.2, -0.2));
}

TEST(Pid, OutputAlwaysWithinLimits) {
  mpc::TargetState target;
  PidController pid(PidConfig{}, target);
  Rng rng(8);
  for (int k = 0; k < 5000; ++k) {
    RelativeState s;
    s.r = Vec3(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-500, 500));
    s.v = Vec3(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
    s.q = rng.uniform_quaternion();
    s.omega = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const ControlInput u = pid.step(s);
    for (int i = 0; i < 3; ++i) {
      ASSERT_LE(std::abs(u.f[i]), 0.2);
      ASSERT_LE(std::abs(u.tau[i]), 8.0);
    }
  }
}

TEST(Pid, ConfigValidation) {
  PidConfig c;
  c.filter_cutoff = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PidConfig{};
  c.kp_r.x() = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Pid, ClosedLoopConvergesOnStandardSeeds) {
  const mpc::Problem pb;
  for (std::uint64_t seed : kSeeds) {
    RelativeState s = sample_initial_state(seed, pb.orbit);
    PidController pid(PidConfig{}, pb.target);
    for (int k = 0; k < 2500; ++k) {
      const ControlInput u = pid.step(s);
      ASSERT_LE(u.f.cwiseAbs().maxCoeff(), 0.2);
      ASSERT_LE(u.tau.cwiseAbs().maxCoeff(), 8.0);
      s = rk4_step(s, u, pb.orbit, pb.params);
    }
    // Same order as the reference 2.051 +- 0.463 m or better.
    EXPECT_LT((s.r - pb.target.r_hat).norm(), 3.0) << seed;
    EXPECT_LT(quat_error_angle(s.q, pb.target.q_hat), 0.01) << seed;
    EXPECT_LT(s.omega.norm(), 0.01) << seed;
  }
}

BcConfig small_bc(int hidden = 32) {
  BcConfig c;
  c.hidden = hidden;
  c.batch_size = 8;
  return c;
}

TEST(Bc, ShapesAndDeterminism) {
  const Demonstration d = synthetic_demo(30, 0.0);
  const BcModel m(small_bc(), fit_normalization({d}), 3);
  EXPECT_EQ(m.params().size(), 2u * BcModel::kLayers);
  const StateArray a = m.predict(d.observed_states[4]);
  EXPECT_EQ(a, m.predict(d.observed_states[4]));
  EXPECT_NEAR(std::sqrt(a[6] * a[6] + a[7] * a[7] + a[8] * a[8] + a[9] * a[9]), 1.0, 1e-12);
  EXPECT_EQ(m.params().get("bc.0.w").rows(), 13);
  EXPECT_EQ(m.params().get("bc.4.w").cols(), 13);
}

TEST(Bc, DefaultWidth) { EXPECT_EQ(BcConfig{}.hidden, 256); }

TEST(Bc, OverfitsSingleBatch) {
  const Demonstration d = synthetic_demo(40, 0.0);
  BcModel m(small_bc(64), fit_normalization({d}), 4);
  ad::AdamW opt({.lr = 2e-3, .weight_decay = 0.0});
  std::vector<std::pair<StateArray, StateArray>> batch;
  for (std::size_t t : {0u, 9u, 18u, 27u, 36u}) {
    batch.emplace_back(d.observed_states[t].to_array(), d.observed_states[t + 1].to_array());
  }
  const double first = bc_train_step(m, opt, batch).total;
  double last = first;
  for (int step = 1; step < 2000 && last > first / 100; ++step) last = bc_train_step(m, opt, batch).total;
  EXPECT_LE(last, first / 100) << "first " << first << " last " << last;
}

TEST(Bc, TrainedBeatsUntrainedOnTrainingStates) {
  const std::vector<Demonstration> demos{synthetic_demo(40, 0.0)};
  BcConfig cfg = small_bc(64);
  cfg.epochs = 80;
  cfg.lr = 3e-3;
  const BcTrainResult r = bc_train(demos, cfg, 9);
  const BcModel untrained(cfg, r.model.stats(), derive_seed(9, 0));
  auto error = [&](const BcModel& m) {
    double sum = 0;
    for (std::size_t k = 0; k < 40; ++k) {
      Tape t(false);
      LossBreakdown parts;
      const StateArray pred = m.predict(demos[0].observed_states[k]);
      const auto l = reconstruction_loss(t, t.constant(normalized_row(pred, m.stats())),
                                         t.constant(normalized_row(
                                             demos[0].observed_states[k + 1].to_array(), m.stats())),
                                         m.stats(), cfg.loss.beta);
      sum += total_loss(t, l, ad::Tensor(), cfg.loss).item();
    }
    return sum;
  };
  const double before = error(untrained), after = error(r.model);
  EXPECT_LE(after * 10, before) << "before " << before << " after " << after;
}

TEST(Bc, NonFiniteLossNamesBatch) {
  const Demonstration d = synthetic_demo(20, 0.0);
  BcModel m(small_bc(), fit_normalization({d}), 2);
  ad::Tensor b = m.params().get("bc.4.b");
  b.mutable_value()(0, 0) = std::nan("");
  ad::AdamW opt;
  try {
    bc_train_step(m, opt, {{d.observed_states[0].to_array(), d.observed_states[1].to_array()}},
                  "epoch 1 batch 4");
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1 batch 4"), std::string::npos);
  }
}

class BcFiles : public ::testing::Test {
 protected:
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("ilsrd_bc_" + std::to_string(::getpid()));
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
  static std::string bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
};

TEST_F(BcFiles, SameSeedGivesIdenticalCheckpoint) {
  const std::vector<Demonstration> demos{synthetic_demo(30, 0.0), synthetic_demo(30, 1.0)};
  BcConfig cfg = small_bc();
  cfg.epochs = 2;
  bc_train(demos, cfg, 5).model.save(dir / "a.ckpt");
  bc_train(demos, cfg, 5).model.save(dir / "b.ckpt");
  EXPECT_EQ(bytes(dir / "a.ckpt"), bytes(dir / "b.ckpt"));
  const BcModel back = BcModel::load(dir / "a.ckpt");
  const BcModel orig = bc_train(demos, cfg, 5).model;
  EXPECT_EQ(back.predict(demos[0].observed_states[3]), orig.predict(demos[0].observed_states[3]));
}

TEST_F(BcFiles, SharesNormalizationWithIlSrd) {
  const std::vector<Demonstration> demos{synthetic_demo(30, 0.0), synthetic_demo(25, 2.0)};
  BcConfig bc = small_bc();
  bc.epochs = 1;
  ModelConfig il;
  il.d = 8;
  il.heads = 2;
  il.encoder_layers = 1;
  il.decoder_layers = 1;
  il.n = 4;
  il.z_dim = 2;
  il.epochs = 1;
  il.samples_per_epoch = 4;
  const auto a = bc_train(demos, bc, 1).model;
  const auto b = train_il_srd(demos, il, 1).model;
  a.save(dir / "bc.ckpt");
  b.save(dir / "il.ckpt");
  EXPECT_EQ(ad::read_checkpoint(dir / "bc.ckpt").meta.at("norm").dump(),
            ad::read_checkpoint(dir / "il.ckpt").meta.at("norm").dump());
  EXPECT_THROW(IlSrdModel::load(dir / "bc.ckpt"), ConfigError);
  EXPECT_THROW(BcModel::load(dir / "il.ckpt"), ConfigError);
}

}  // namespace
}  // namespace ilsrd
