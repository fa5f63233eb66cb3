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

#include "ilsrd/il_srd.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ilsrd/json_io.hpp"

namespace ilsrd {

using ad::Mat;
using ad::Tape;
using ad::Tensor;

std::string to_string(DecoderTarget t) {
  switch (t) {
    case DecoderTarget::kAnchored: return "anchored";
    case DecoderTarget::kZero: return "zero";
    case DecoderTarget::kLearnable: return "learnable";
  }
  return "anchored";
}

DecoderTarget decoder_target_from_string(const std::string& s) {
  if (s == "anchored") return DecoderTarget::kAnchored;
  if (s == "zero") return DecoderTarget::kZero;
  if (s == "learnable") return DecoderTarget::kLearnable;
  throw ConfigError("unknown decoder target '" + s + "' (expected anchored, zero or learnable)");
}

void ModelConfig::validate() const {
  if (d < 1 || heads < 1 || d % heads != 0) {
    throw ConfigError("model: d must be a positive multiple of heads");
  }
  if (encoder_layers < 1 || decoder_layers < 1) throw ConfigError("model: need at least one layer");
  if (n < 1 || z_dim < 1 || ff_mult < 1) throw ConfigError("model: n, z_dim, ff_mult must be positive");
  if (!(lr > 0) || !(weight_decay >= 0)) throw ConfigError("model: invalid optimizer settings");
  if (batch_size < 1 || epochs < 0 || samples_per_epoch < 0) {
    throw ConfigError("model: invalid batch/epoch settings");
  }
  if (!(kappa >= 0)) throw ConfigError("model: kappa must be non-negative");
  loss.validate();
}

nlohmann::json ModelConfig::to_json() const {
  return {{"d", d},
          {"heads", heads},
          {"encoder_layers", encoder_layers},
          {"decoder_layers", decoder_layers},
          {"n", n},
          {"z_dim", z_dim},
          {"ff_mult", ff_mult},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"samples_per_epoch", samples_per_epoch},
          {"kappa", kappa},
          {"loss", loss.to_json()},
          {"decoder_target", to_string(decoder_target)},
          {"decoder_positional", decoder_positional}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"d", "heads", "encoder_layers", "decoder_layers", "n", "z_dim", "ff_mult",
                       "lr", "weight_decay", "batch_size", "epochs", "samples_per_epoch", "kappa",
                       "loss", "decoder_target", "decoder_positional"},
                      "model");
  ModelConfig c;
  auto rd = [&](const char* k, auto& out) {
    if (j.contains(k)) out = j.at(k).get<std::decay_t<decltype(out)>>();
  };
  rd("d", c.d);
  rd("heads", c.heads);
  rd("encoder_layers", c.encoder_layers);
  rd("decoder_layers", c.decoder_layers);
  rd("n", c.n);
  rd("z_dim", c.z_dim);
  rd("ff_mult", c.ff_mult);
  rd("lr", c.lr);
  rd("weight_decay", c.weight_decay);
  rd("batch_size", c.batch_size);
  rd("epochs", c.epochs);
  rd("samples_per_epoch", c.samples_per_epoch);
  rd("kappa", c.kappa);
  rd("decoder_positional", c.decoder_positional);
  if (j.contains("decoder_target")) {
    c.decoder_target = decoder_target_from_string(j.at("decoder_target").get<std::string>());
  }
  if (j.contains("loss")) c.loss = LossWeights::from_json(j.at("loss"));
  c.validate();
  return c;
}

Mat sinusoidal_table(int rows, int d) {
  Mat pe(rows, d);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / d);
      pe(pos, i) = std::sin(pos * freq);
      if (i + 1 < d) pe(pos, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

IlSrdModel::IlSrdModel(ModelConfig cfg, NormStats stats, std::uint64_t init_seed)
    : cfg_(std::move(cfg)), stats_(stats) {
  cfg_.validate();
  Rng rng(init_seed);
  const int d = cfg_.d, ff = cfg_.ff_mult * cfg_.d, s = kStateDim;
  auto linear = [&](const std::string& name, int in, int out) {
    params_.add_uniform(name + ".w", in, out, in, rng);
    params_.add_uniform(name + ".b", 1, out, in, rng);
  };
  auto attention = [&](const std::string& name) {
    for (const char* m : {".q", ".k", ".v", ".o"}) linear(name + m, d, d);
  };
  auto layer_norm = [&](const std::string& name) {
    params_.add_constant(name + ".gain", 1, d, 1.0);
    params_.add_constant(name + ".bias", 1, d, 0.0);
  };
  auto ffn = [&](const std::string& name) {
    linear(name + ".1", d, ff);
    linear(name + ".2", ff, d);
  };

  linear("enc.embed_s", s, d);
  linear("enc.embed_a", s, d);
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    attention(pre + ".attn");
    layer_norm(pre + ".ln1");
    ffn(pre + ".ff");
    layer_norm(pre + ".ln2");
  }
  linear("enc.mu", d, cfg_.z_dim);
  linear("enc.logvar", d, cfg_.z_dim);

  linear("dec.phi_z", cfg_.z_dim, d);
  linear("dec.psi_s", s, d);
  if (cfg_.decoder_target == DecoderTarget::kLearnable) {
    params_.add_uniform("dec.target", cfg_.n, d, d, rng);
  }
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    attention(pre + ".self");
    layer_norm(pre + ".ln1");
    attention(pre + ".cross");
    layer_norm(pre + ".ln2");
    ffn(pre + ".ff");
    layer_norm(pre + ".ln3");
  }
  linear("dec.head", d, s);

  enc_table_ = Tensor::constant(sinusoidal_table(cfg_.n + 1, d));
  dec_table_ = Tensor::constant(cfg_.decoder_positional ? sinusoidal_table(cfg_.n, d)
                                                        : Mat::Zero(cfg_.n, d));
}

Tensor IlSrdModel::attention(Tape& t, const std::string& pre, const Tensor& q_in,
                             const Tensor& kv_in) const {
  const int h = cfg_.heads, dh = cfg_.d / cfg_.heads;
  const Tensor q = t.linear(q_in, p(pre + ".q.w"), p(pre + ".q.b"));
  const Tensor k = t.linear(kv_in, p(pre + ".k.w"), p(pre + ".k.b"));
  const Tensor v = t.linear(kv_in, p(pre + ".v.w"), p(pre + ".v.b"));
  const Tensor kt = t.transpose(k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> heads;
  heads.reserve(h);
  for (int i = 0; i < h; ++i) {
    const Tensor scores =
        t.scale(t.matmul(t.slice_cols(q, i * dh, dh), t.slice_rows(kt, i * dh, dh)), scale);
    heads.push_back(t.matmul(t.softmax_rows(scores), t.slice_cols(v, i * dh, dh)));
  }
  const Tensor cat = h == 1 ? heads.front() : t.concat_cols(heads);
  return t.linear(cat, p(pre + ".o.w"), p(pre + ".o.b"));
}

Tensor IlSrdModel::feed_forward(Tape& t, const std::string& pre, const Tensor& x) const {
  const Tensor hidden = t.relu(t.linear(x, p(pre + ".1.w"), p(pre + ".1.b")));
  return t.linear(hidden, p(pre + ".2.w"), p(pre + ".2.b"));
}

Tensor IlSrdModel::norm(Tape& t, const std::string& pre, const Tensor& x) const {
  return t.layer_norm(x, p(pre + ".gain"), p(pre + ".bias"));
}

EncoderOutput IlSrdModel::encode(Tape& t, const Tensor& state_norm,
                                 const Tensor& actions_norm) const {
  if (state_norm.rows() != 1 || state_norm.cols() != static_cast<int>(kStateDim)) {
    throw ShapeError("encode: state must be 1 x 13");
  }
  if (actions_norm.rows() != cfg_.n || actions_norm.cols() != static_cast<int>(kStateDim)) {
    throw ShapeError("encode: expected " + std::to_string(cfg_.n) + " x 13 actions");
  }
  const Tensor es = t.linear(state_norm, p("enc.embed_s.w"), p("enc.embed_s.b"));
  const Tensor ea = t.linear(actions_norm, p("enc.embed_a.w"), p("enc.embed_a.b"));
  Tensor x = t.add_positional(t.concat_rows({es, ea}), enc_table_);
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    x = norm(t, pre + ".ln1", t.add(x, attention(t, pre + ".attn", x, x)));
    x = norm(t, pre + ".ln2", t.add(x, feed_forward(t, pre + ".ff", x)));
  }
  const Tensor first = t.slice_rows(x, 0, 1);
  EncoderOutput out;
  out.mu = t.linear(first, p("enc.mu.w"), p("enc.mu.b"));
  out.logvar = t.clamp(t.linear(first, p("enc.logvar.w"), p("enc.logvar.b")), -10.0, 10.0);
  return out;
}

Tensor IlSrdModel::reparameterize(Tape& t, const Tensor& mu, const Tensor& logvar,
                                  const Tensor& eps) {
  return t.add(mu, t.mul(t.exp(t.scale(logvar, 0.5)), eps));
}

DecoderInputs IlSrdModel::build_decoder_inputs(Tape& t, const Tensor& z,
                                               const Tensor& state_norm) const {
  const Tensor zt = t.linear(z, p("dec.phi_z.w"), p("dec.phi_z.b"));
  const Tensor st = t.linear(state_norm, p("dec.psi_s.w"), p("dec.psi_s.b"));
  DecoderInputs in;
  in.memory = t.concat_rows({zt, st});
  Tensor base;
  switch (cfg_.decoder_target) {
    case DecoderTarget::kAnchored: base = t.repeat_rows(st, cfg_.n); break;
    case DecoderTarget::kZero: base = t.constant(Mat::Zero(cfg_.n, cfg_.d)); break;
    case DecoderTarget::kLearnable: base = p("dec.target"); break;
  }
  in.target = t.add_positional(base, dec_table_);
  return in;
}

Tensor IlSrdModel::decode(Tape& t, const DecoderInputs& in) const {
  Tensor y = in.target;
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    y = norm(t, pre + ".ln1", t.add(y, attention(t, pre + ".self", y, y)));
    y = norm(t, pre + ".ln2", t.add(y, attention(t, pre + ".cross", y, in.memory)));
    y = norm(t, pre + ".ln3", t.add(y, feed_forward(t, pre + ".ff", y)));
  }
  return t.linear(y, p("dec.head.w"), p("dec.head.b"));
}

Tensor IlSrdModel::item_loss(Tape& t, const TrainingItem& item, const Mat& eps,
                             LossBreakdown* parts) const {
  if (static_cast<int>(item.frames.size()) != cfg_.n) {
    throw ShapeError("item_loss: expected " + std::to_string(cfg_.n) + " frames");
  }
  const Tensor state = t.constant(normalized_row(item.state, stats_));
  const Tensor target = t.constant(normalized_rows(item.frames, stats_));
  const EncoderOutput enc = encode(t, state, target);
  const Tensor z = reparameterize(t, enc.mu, enc.logvar, t.constant(eps));
  const Tensor pred = decode(t, build_decoder_inputs(t, z, state));
  const ReconstructionLoss rec = reconstruction_loss(t, pred, target, stats_, cfg_.loss.beta);
  const Tensor kl = kl_loss(t, enc.mu, enc.logvar);
  const Tensor total = total_loss(t, rec, kl, cfg_.loss);
  if (parts) {
    *parts = {rec.r.item(), rec.v.item(), rec.q.item(), rec.omega.item(), kl.item(), total.item()};
  }
  return total;
}

std::vector<StateArray> IlSrdModel::predict(const RelativeState& observed) const {
  if (!observed.is_finite()) throw Error("predict: non-finite state");
  Tape t(false);
  const Tensor state = t.constant(normalized_row(observed.to_array(), stats_));
  const Tensor z = t.constant(Mat::Zero(1, cfg_.z_dim));
  const Mat out = decode(t, build_decoder_inputs(t, z, state)).value();
  std::vector<StateArray> frames(cfg_.n);
  for (int r = 0; r < cfg_.n; ++r) {
    StateArray x{};
    for (std::size_t c = 0; c < kStateDim; ++c) x[c] = out(r, c);
    frames[r] = stats_.denormalize(x);
  }
  return frames;
}

void IlSrdModel::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nlohmann::json meta = {{"kind", "ilsrd"}, {"config", cfg_.to_json()}, {"norm", stats_.to_json()}};
  if (!extra.is_null()) meta["extra"] = extra;
  ad::save_checkpoint(path, params_, meta);
}

IlSrdModel IlSrdModel::load(const std::filesystem::path& path) {
  const ad::Checkpoint ck = ad::read_checkpoint(path);
  if (ck.meta.value("kind", "") != "ilsrd") {
    throw ConfigError(path.string() + ": not an IL-SRD checkpoint");
  }
  IlSrdModel m(ModelConfig::from_json(ck.meta.at("config")), NormStats::from_json(ck.meta.at("norm")),
               0);
  ad::load_into(ck, m.params_);
  return m;
}

LossBreakdown train_step(IlSrdModel& model, ad::AdamW& opt, const std::vector<TrainingItem>& batch,
                         Rng& eps_rng, const std::string& batch_label) {
  if (batch.empty()) throw Error("train_step: empty batch");
  model.params().zero_grad();
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossBreakdown mean;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Mat eps(1, model.config().z_dim);
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(0, k) = eps_rng.normal();
    Tape t;
    LossBreakdown parts;
    const Tensor loss = model.item_loss(t, batch[i], eps, &parts);
    if (!std::isfinite(parts.total)) {
      throw Error("non-finite loss in batch " + batch_label + " item " + std::to_string(i));
    }
    t.backward(t.scale(loss, inv));
    mean.accumulate(parts, inv);
  }
  opt.step(model.params());
  return mean;
}

TrainResult train_il_srd(const std::vector<Demonstration>& demos, const ModelConfig& cfg,
                         std::uint64_t seed, const TrainOptions& opts) {
  cfg.validate();
  if (demos.empty()) throw Error("train: empty dataset");
  const NormStats stats = fit_normalization(demos);
  TrainResult res{IlSrdModel(cfg, stats, derive_seed(seed, 0)), {}};
  ad::AdamW opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng sample_rng(derive_seed(seed, 1));
  Rng eps_rng(derive_seed(seed, 2));
  const TransitionSampler sampler(demos);
  const long per_epoch =
      cfg.samples_per_epoch > 0 ? cfg.samples_per_epoch : static_cast<long>(sampler.size());

  res.curve = run_epochs(cfg.epochs, per_epoch, cfg.batch_size, opts,
                         [&](const std::string& label, long count, std::string& items) {
                           std::vector<TrainingItem> batch;
                           for (long k = 0; k < count; ++k) {
                             const auto [traj, t] = sampler.draw(sample_rng);
                             batch.push_back(sample_training_item(demos[traj], t, cfg.n));
                             items += (k ? " " : "") + std::to_string(traj) + ":" + std::to_string(t);
                           }
                           return train_step(res.model, opt, batch, eps_rng,
                                             label + " [" + items + "]");
                         });
  return res;
}

}  // namespace ilsrd
