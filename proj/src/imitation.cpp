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

#include "ilsrd/imitation.hpp"

#include "ilsrd/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ilsrd {

using ad::Mat;
using ad::Tape;
using ad::Tensor;

StateArray NormStats::normalize(const StateArray& x) const {
  StateArray y{};
  for (std::size_t i = 0; i < kStateDim; ++i) y[i] = (x[i] - mean[i]) / std[i];
  return y;
}

StateArray NormStats::denormalize_raw(const StateArray& x) const {
  StateArray y{};
  for (std::size_t i = 0; i < kStateDim; ++i) y[i] = x[i] * std[i] + mean[i];
  return y;
}

StateArray NormStats::denormalize(const StateArray& x) const {
  StateArray y = denormalize_raw(x);
  const double n = std::sqrt(y[6] * y[6] + y[7] * y[7] + y[8] * y[8] + y[9] * y[9]);
  if (!(n > 0) || !std::isfinite(n)) throw DegenerateQuaternion();
  for (std::size_t i = 6; i < 10; ++i) y[i] /= n;
  return y;
}

nlohmann::json NormStats::to_json() const { return {{"mean", mean}, {"std", std}}; }

NormStats NormStats::from_json(const nlohmann::json& j) {
  NormStats s;
  s.mean = j.at("mean").get<StateArray>();
  s.std = j.at("std").get<StateArray>();
  for (double v : s.std) {
    if (!(v >= kStdFloor)) throw ConfigError("normalization std below floor");
  }
  return s;
}

NormStats fit_normalization(const std::vector<Demonstration>& demos) {
  std::size_t count = 0;
  StateArray sum{}, sq{};
  for (const auto& d : demos) {
    for (const auto& s : d.observed_states) {
      const StateArray a = s.to_array();
      for (std::size_t i = 0; i < kStateDim; ++i) sum[i] += a[i];
      ++count;
    }
  }
  if (count == 0) throw Error("fit_normalization: empty dataset");
  NormStats st;
  for (std::size_t i = 0; i < kStateDim; ++i) st.mean[i] = sum[i] / static_cast<double>(count);
  // Second pass about the mean for accuracy.
  for (const auto& d : demos) {
    for (const auto& s : d.observed_states) {
      const StateArray a = s.to_array();
      for (std::size_t i = 0; i < kStateDim; ++i) sq[i] += (a[i] - st.mean[i]) * (a[i] - st.mean[i]);
    }
  }
  for (std::size_t i = 0; i < kStateDim; ++i) {
    st.std[i] = std::max(NormStats::kStdFloor, std::sqrt(sq[i] / static_cast<double>(count)));
  }
  return st;
}

TrainingItem sample_training_item(const Demonstration& demo, std::size_t t, int n) {
  const std::size_t L = demo.length();
  if (t >= L) throw Error("sample_training_item: t out of range");
  if (n < 1) throw Error("sample_training_item: n must be positive");
  TrainingItem item;
  item.state = demo.observed_states[t].to_array();
  item.frames.reserve(n);
  for (int k = 1; k <= n; ++k) {
    item.frames.push_back(demo.observed_states[std::min(t + k, L)].to_array());
  }
  return item;
}

Mat normalized_rows(const std::vector<StateArray>& rows, const NormStats& stats) {
  Mat m(static_cast<Eigen::Index>(rows.size()), kStateDim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const StateArray z = stats.normalize(rows[r]);
    for (std::size_t c = 0; c < kStateDim; ++c) m(r, c) = z[c];
  }
  return m;
}

Mat normalized_row(const StateArray& row, const NormStats& stats) {
  return normalized_rows({row}, stats);
}

void LossWeights::validate() const {
  if (!(r >= 0 && v >= 0 && q >= 0 && omega >= 0 && kl >= 0)) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (!(beta >= 0 && beta <= 1)) throw ConfigError("loss mix beta must lie in [0, 1]");
}

nlohmann::json LossWeights::to_json() const {
  return {{"r", r}, {"v", v}, {"q", q}, {"omega", omega}, {"kl", kl}, {"beta", beta}};
}

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"r", "v", "q", "omega", "kl", "beta"}, "loss");
  LossWeights w;
  auto rd = [&](const char* k, double& out) {
    if (j.contains(k)) out = j.at(k).get<double>();
  };
  rd("r", w.r);
  rd("v", w.v);
  rd("q", w.q);
  rd("omega", w.omega);
  rd("kl", w.kl);
  rd("beta", w.beta);
  w.validate();
  return w;
}

namespace {

// Per-frame squared error summed over `cols` channels, averaged over frames.
Tensor block_loss(Tape& t, const Tensor& a, const Tensor& b, int start, int cols) {
  return t.scale(t.mse(t.slice_cols(a, start, cols), t.slice_cols(b, start, cols)), cols);
}

}  // namespace

ReconstructionLoss reconstruction_loss(Tape& t, const Tensor& pred_norm, const Tensor& target_norm,
                                       const NormStats& stats, double beta) {
  if (pred_norm.cols() != static_cast<int>(kStateDim)) {
    throw ShapeError("reconstruction_loss: expected 13 channels");
  }
  Mat sd(1, kStateDim), mu(1, kStateDim);
  for (std::size_t i = 0; i < kStateDim; ++i) {
    sd(0, i) = stats.std[i];
    mu(0, i) = stats.mean[i];
  }
  const Tensor sd_row = t.constant(sd), mu_row = t.constant(mu);
  const Tensor pred_phys = t.add_row(t.mul_row(pred_norm, sd_row), mu_row);
  const Tensor target_phys = t.add_row(t.mul_row(target_norm, sd_row), mu_row);

  auto mixed = [&](int start) {
    return t.add(t.scale(block_loss(t, pred_norm, target_norm, start, 3), beta),
                 t.scale(block_loss(t, pred_phys, target_phys, start, 3), 1.0 - beta));
  };
  ReconstructionLoss out;
  out.r = mixed(0);
  out.v = mixed(3);
  out.omega = mixed(10);
  out.q = t.mean(t.quat_geodesic_sq(t.row_normalize(t.slice_cols(pred_phys, 6, 4)),
                                    t.row_normalize(t.slice_cols(target_phys, 6, 4))));
  return out;
}

Tensor kl_loss(Tape& t, const Tensor& mu, const Tensor& logvar) {
  // -1/2 * sum(1 + logvar - mu^2 - exp(logvar))
  const Tensor inner = t.sub(t.sub(logvar, t.square(mu)), t.exp(logvar));
  return t.scale(t.add(t.sum(inner), t.constant(Mat::Constant(1, 1, mu.value().size()))), -0.5);
}

Tensor total_loss(Tape& t, const ReconstructionLoss& p, const Tensor& kl, const LossWeights& w) {
  Tensor sum = t.add(t.add(t.scale(p.r, w.r), t.scale(p.v, w.v)),
                     t.add(t.scale(p.q, w.q), t.scale(p.omega, w.omega)));
  if (kl.defined()) sum = t.add(sum, t.scale(kl, w.kl));
  return sum;
}

void LossBreakdown::accumulate(const LossBreakdown& o, double w) {
  r += w * o.r;
  v += w * o.v;
  q += w * o.q;
  omega += w * o.omega;
  kl += w * o.kl;
  total += w * o.total;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,l_r,l_v,l_q,l_omega,kl,total\n";
  for (const auto& c : curve) {
    out << c.epoch << ',' << format_double(c.loss.r) << ',' << format_double(c.loss.v) << ','
        << format_double(c.loss.q) << ',' << format_double(c.loss.omega) << ','
        << format_double(c.loss.kl) << ',' << format_double(c.loss.total) << '\n';
  }
}

TransitionSampler::TransitionSampler(const std::vector<Demonstration>& demos) {
  for (const auto& d : demos) offsets_.push_back(offsets_.back() + d.length());
  if (size() == 0) throw Error("train: dataset has no transitions");
}

std::pair<std::size_t, std::size_t> TransitionSampler::draw(Rng& rng) const {
  const std::size_t g = rng.below(size());
  const std::size_t traj = std::upper_bound(offsets_.begin(), offsets_.end(), g) - offsets_.begin() - 1;
  return {traj, g - offsets_[traj]};
}

std::vector<CurvePoint> run_epochs(int epochs, long per_epoch, int batch_size,
                                   const TrainOptions& opts, const BatchFn& batch) {
  std::vector<CurvePoint> curve;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    LossBreakdown acc;
    long seen = 0;
    for (int index = 0; seen < per_epoch; ++index) {
      const long count = std::min<long>(batch_size, per_epoch - seen);
      std::string items;
      const LossBreakdown l =
          batch("epoch " + std::to_string(epoch) + " batch " + std::to_string(index), count, items);
      acc.accumulate(l, static_cast<double>(count));
      seen += count;
    }
    CurvePoint cp{epoch, {}};
    cp.loss.accumulate(acc, 1.0 / static_cast<double>(seen));
    curve.push_back(cp);
    if (opts.on_epoch) opts.on_epoch(cp);
    if (opts.log) {
      std::ostringstream msg;
      msg << "epoch " << epoch << " loss " << cp.loss.total << " (r " << cp.loss.r << " v "
          << cp.loss.v << " q " << cp.loss.q << " w " << cp.loss.omega << " kl " << cp.loss.kl
          << ")";
      opts.log(msg.str());
    }
  }
  return curve;
}

}  // namespace ilsrd
