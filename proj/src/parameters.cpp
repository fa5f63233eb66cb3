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

#include "ilsrd/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ilsrd::ad {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

Tensor ParameterStore::add(const std::string& name, Mat init) {
  if (index_.count(name)) throw ConfigError("parameter '" + name + "' already exists");
  index_[name] = names_.size();
  names_.push_back(name);
  tensors_.push_back(Tensor::variable(std::move(init)));
  return tensors_.back();
}

Tensor ParameterStore::add_uniform(const std::string& name, int rows, int cols, int fan_in,
                                   Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-k, k);
  return add(name, std::move(m));
}

Tensor ParameterStore::add_constant(const std::string& name, int rows, int cols, double value) {
  return add(name, Mat::Constant(rows, cols, value));
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return tensors_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value().size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

void ParameterStore::scale_grad(double s) {
  for (auto& t : tensors_) {
    if (t.node()->grad.size() != 0) t.node()->grad *= s;
  }
}

std::vector<Tensor> ParameterStore::tensors() const { return tensors_; }

void AdamW::step(ParameterStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    Tensor p = params.get(name);
    Mat& w = p.mutable_value();
    Mat& m = m_.try_emplace(name, Mat::Zero(w.rows(), w.cols())).first->second;
    Mat& v = v_.try_emplace(name, Mat::Zero(w.rows(), w.cols())).first->second;
    const Mat g = p.grad();
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    w *= 1.0 - cfg_.lr * cfg_.weight_decay;
    w.array() -= cfg_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps);
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["meta"] = meta;
  header["parameters"] = nlohmann::json::array();
  for (const auto& name : params.names()) {
    const Mat& v = params.get(name).value();
    header["parameters"].push_back({{"name", name}, {"shape", {v.rows(), v.cols()}}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& name : params.names()) {
    const Mat& v = params.get(name).value();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing checkpoint: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 30)) throw IoError(path.string() + ": truncated or invalid header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated header");
  Checkpoint ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    if (header.at("format_version").get<int>() != 1) {
      throw IoError(path.string() + ": unsupported checkpoint version");
    }
    ck.meta = header.at("meta");
    for (const auto& p : header.at("parameters")) {
      const std::string name = p.at("name").get<std::string>();
      const auto rows = p.at("shape")[0].get<Eigen::Index>();
      const auto cols = p.at("shape")[1].get<Eigen::Index>();
      Mat v(rows, cols);
      in.read(reinterpret_cast<char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
      if (!in) throw IoError(path.string() + ": truncated data for '" + name + "'");
      ck.names.push_back(name);
      ck.values.emplace(name, std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  in.peek();
  if (!in.eof()) throw IoError(path.string() + ": trailing bytes after parameter data");
  return ck;
}

void load_into(const Checkpoint& ckpt, ParameterStore& params) {
  if (ckpt.names != params.names()) {
    throw ConfigError("checkpoint parameters do not match the model configuration");
  }
  for (const auto& name : ckpt.names) {
    Tensor t = params.get(name);
    const Mat& v = ckpt.values.at(name);
    if (v.rows() != t.value().rows() || v.cols() != t.value().cols()) {
      throw ConfigError("checkpoint shape mismatch for '" + name + "'");
    }
    t.mutable_value() = v;
    t.zero_grad();
  }
}

}  // namespace ilsrd::ad
