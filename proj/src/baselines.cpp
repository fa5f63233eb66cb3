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

#include <cmath>

#include "ilsrd/json_io.hpp"

namespace ilsrd {

using ad::Mat;
using ad::Tape;
using ad::Tensor;

void PidConfig::validate() const {
  for (const Vec3* g : {&kp_r, &ki_r, &kd_r, &kp_q, &ki_q, &kd_q, &k_rate}) {
    if (!(g->minCoeff() >= 0) || !g->allFinite()) throw ConfigError("pid: gains must be >= 0");
  }
  if (!(filter_cutoff > 0) || !(filter_damping > 0)) {
    throw ConfigError("pid: filter cutoff and damping must be positive");
  }
  if (!(derivative_blend >= 0 && derivative_blend <= 1)) {
    throw ConfigError("pid: derivative blend must lie in [0, 1]");
  }
  if (!(integral_limit_r >= 0) || !(integral_limit_q >= 0)) {
    throw ConfigError("pid: integral limits must be >= 0");
  }
  if (!(thrust_limit > 0) || !(torque_limit > 0) || !(dt > 0)) {
    throw ConfigError("pid: limits and dt must be positive");
  }
}

LowPass2::LowPass2(double cutoff, double damping, double dt) {
  const double k = 2.0 / dt;
  const double w2 = cutoff * cutoff;
  const double a0 = k * k + 2 * damping * cutoff * k + w2;
  b0_ = w2 / a0;
  b1_ = 2 * b0_;
  b2_ = b0_;
  a1_ = (2 * w2 - 2 * k * k) / a0;
  a2_ = (k * k - 2 * damping * cutoff * k + w2) / a0;
}

double LowPass2::step(double x) {
  const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
  x2_ = x1_;
  x1_ = x;
  y2_ = y1_;
  y1_ = y;
  return y;
}

PidController::PidController(PidConfig cfg, mpc::TargetState target)
    : cfg_(std::move(cfg)), target_(target) {
  cfg_.validate();
  target_.validate();
  reset();
}

void PidController::reset() {
  int_r_.setZero();
  int_q_.setZero();
  prev_er_.setZero();
  prev_eq_.setZero();
  primed_ = false;
  for (auto* bank : {&lp_r_, &lp_q_}) {
    for (auto& f : *bank) f = LowPass2(cfg_.filter_cutoff, cfg_.filter_damping, cfg_.dt);
  }
}

ControlInput PidController::step(const RelativeState& s) {
  const Vec3 er = s.r - target_.r_hat;
  const Quaternion dq = (target_.q_hat.conjugate() * s.q).positive_hemisphere();
  const Vec3 eq = dq.vec();
  if (!primed_) {
    prev_er_ = er;
    prev_eq_ = eq;
    primed_ = true;
  }
  const double a = cfg_.derivative_blend;
  const Vec3 dr_raw = a * s.v + (1 - a) * (er - prev_er_) / cfg_.dt;
  const Vec3 dq_raw = a * 0.5 * s.omega + (1 - a) * (eq - prev_eq_) / cfg_.dt;
  prev_er_ = er;
  prev_eq_ = eq;

  ControlInput u;
  for (int i = 0; i < 3; ++i) {
    const double dr = lp_r_[i].step(dr_raw[i]);
    const double dqf = lp_q_[i].step(dq_raw[i]);
    const double f_unsat = -(cfg_.kp_r[i] * er[i] + cfg_.ki_r[i] * int_r_[i] + cfg_.kd_r[i] * dr);
    const double t_unsat = -(cfg_.kp_q[i] * eq[i] + cfg_.ki_q[i] * int_q_[i] + cfg_.kd_q[i] * dqf) -
                           cfg_.k_rate[i] * s.omega[i];
    u.f[i] = std::clamp(f_unsat, -cfg_.thrust_limit, cfg_.thrust_limit);
    u.tau[i] = std::clamp(t_unsat, -cfg_.torque_limit, cfg_.torque_limit);
    // Conditional integration: hold the integrator while its axis saturates.
    if (u.f[i] == f_unsat) {
      int_r_[i] = std::clamp(int_r_[i] + er[i] * cfg_.dt, -cfg_.integral_limit_r, cfg_.integral_limit_r);
    }
    if (u.tau[i] == t_unsat) {
      int_q_[i] = std::clamp(int_q_[i] + eq[i] * cfg_.dt, -cfg_.integral_limit_q, cfg_.integral_limit_q);
    }
  }
  return u;
}

void BcConfig::validate() const {
  if (hidden < 1) throw ConfigError("bc: hidden width must be positive");
  if (!(lr > 0) || !(weight_decay >= 0)) throw ConfigError("bc: invalid optimizer settings");
  if (epochs < 0 || batch_size < 1 || samples_per_epoch < 0) {
    throw ConfigError("bc: invalid batch/epoch settings");
  }
  loss.validate();
}

nlohmann::json BcConfig::to_json() const {
  return {{"hidden", hidden},         {"lr", lr},
          {"weight_decay", weight_decay}, {"epochs", epochs},
          {"batch_size", batch_size}, {"samples_per_epoch", samples_per_epoch},
          {"loss", loss.to_json()}};
}

BcConfig BcConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, {"hidden", "lr", "weight_decay", "epochs", "batch_size", "samples_per_epoch", "loss"}, "bc");
  BcConfig c;
  auto rd = [&](const char* k, auto& out) {
    if (j.contains(k)) out = j.at(k).get<std::decay_t<decltype(out)>>();
  };
  rd("hidden", c.hidden);
  rd("lr", c.lr);
  rd("weight_decay", c.weight_decay);
  rd("epochs", c.epochs);
  rd("batch_size", c.batch_size);
  rd("samples_per_epoch", c.samples_per_epoch);
  if (j.contains("loss")) c.loss = LossWeights::from_json(j.at("loss"));
  c.validate();
  return c;
}

BcModel::BcModel(BcConfig cfg, NormStats stats, std::uint64_t init_seed)
    : cfg_(std::move(cfg)), stats_(stats) {
  cfg_.validate();
  Rng rng(init_seed);
  const int s = kStateDim, h = cfg_.hidden;
  const int widths[kLayers + 1] = {s, h, h, h, h, s};
  for (int l = 0; l < kLayers; ++l) {
    const std::string pre = "bc." + std::to_string(l);
    params_.add_uniform(pre + ".w", widths[l], widths[l + 1], widths[l], rng);
    params_.add_uniform(pre + ".b", 1, widths[l + 1], widths[l], rng);
  }
}

Tensor BcModel::forward(Tape& t, const Tensor& x) const {
  Tensor h = x;
  for (int l = 0; l < kLayers; ++l) {
    const std::string pre = "bc." + std::to_string(l);
    h = t.linear(h, params_.get(pre + ".w"), params_.get(pre + ".b"));
    if (l + 1 < kLayers) h = t.relu(h);
  }
  return h;
}

Tensor BcModel::item_loss(Tape& t, const StateArray& state, const StateArray& next,
                          LossBreakdown* parts) const {
  const Tensor pred = forward(t, t.constant(normalized_row(state, stats_)));
  const Tensor target = t.constant(normalized_row(next, stats_));
  const ReconstructionLoss rec = reconstruction_loss(t, pred, target, stats_, cfg_.loss.beta);
  const Tensor total = total_loss(t, rec, Tensor(), cfg_.loss);
  if (parts) *parts = {rec.r.item(), rec.v.item(), rec.q.item(), rec.omega.item(), 0.0, total.item()};
  return total;
}

StateArray BcModel::predict(const RelativeState& observed) const {
  if (!observed.is_finite()) throw Error("predict: non-finite state");
  Tape t(false);
  const Mat out = forward(t, t.constant(normalized_row(observed.to_array(), stats_))).value();
  StateArray x{};
  for (std::size_t c = 0; c < kStateDim; ++c) x[c] = out(0, c);
  return stats_.denormalize(x);
}

void BcModel::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nlohmann::json meta = {{"kind", "bc"}, {"config", cfg_.to_json()}, {"norm", stats_.to_json()}};
  if (!extra.is_null()) meta["extra"] = extra;
  ad::save_checkpoint(path, params_, meta);
}

BcModel BcModel::load(const std::filesystem::path& path) {
  const ad::Checkpoint ck = ad::read_checkpoint(path);
  if (ck.meta.value("kind", "") != "bc") throw ConfigError(path.string() + ": not a BC checkpoint");
  BcModel m(BcConfig::from_json(ck.meta.at("config")), NormStats::from_json(ck.meta.at("norm")), 0);
  ad::load_into(ck, m.params_);
  return m;
}

LossBreakdown bc_train_step(BcModel& model, ad::AdamW& opt,
                            const std::vector<std::pair<StateArray, StateArray>>& batch,
                            const std::string& batch_label) {
  if (batch.empty()) throw Error("bc_train_step: empty batch");
  model.params().zero_grad();
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossBreakdown mean;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tape t;
    LossBreakdown parts;
    const Tensor loss = model.item_loss(t, batch[i].first, batch[i].second, &parts);
    if (!std::isfinite(parts.total)) {
      throw Error("non-finite loss in batch " + batch_label + " item " + std::to_string(i));
    }
    t.backward(t.scale(loss, inv));
    mean.accumulate(parts, inv);
  }
  opt.step(model.params());
  return mean;
}

BcTrainResult bc_train(const std::vector<Demonstration>& demos, const BcConfig& cfg,
                       std::uint64_t seed, const TrainOptions& opts) {
  cfg.validate();
  if (demos.empty()) throw Error("train-bc: empty dataset");
  BcTrainResult res{BcModel(cfg, fit_normalization(demos), derive_seed(seed, 0)), {}};
  ad::AdamW opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng sample_rng(derive_seed(seed, 1));
  const TransitionSampler sampler(demos);
  const long per_epoch =
      cfg.samples_per_epoch > 0 ? cfg.samples_per_epoch : static_cast<long>(sampler.size());
  res.curve = run_epochs(cfg.epochs, per_epoch, cfg.batch_size, opts,
                         [&](const std::string& label, long count, std::string& items) {
                           std::vector<std::pair<StateArray, StateArray>> batch;
                           for (long k = 0; k < count; ++k) {
                             const auto [traj, t] = sampler.draw(sample_rng);
                             const auto& obs = demos[traj].observed_states;
                             batch.emplace_back(obs[t].to_array(), obs[t + 1].to_array());
                             items += (k ? " " : "") + std::to_string(traj) + ":" + std::to_string(t);
                           }
                           return bc_train_step(res.model, opt, batch, label + " [" + items + "]");
                         });
  return res;
}

}  // namespace ilsrd
