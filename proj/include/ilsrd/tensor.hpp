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

// Dense 2-D tensors with tape-based reverse-mode differentiation.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ilsrd/error.hpp"

namespace ilsrd::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Mat value;
  Mat grad;  ///< empty until a gradient arrives
  bool requires_grad = false;
  bool leaf = true;

  void accumulate(const Mat& g);
};

/// Shared handle to a node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  /// Leaf that collects gradients across backward passes.
  static Tensor variable(Mat value);
  static Tensor constant(Mat value);

  const Mat& value() const { return node_->value; }
  Mat& mutable_value() { return node_->value; }
  /// Gradient, or zeros of the value's shape if none has arrived.
  Mat grad() const;
  void zero_grad() { node_->grad.resize(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }
  int rows() const { return static_cast<int>(node_->value.rows()); }
  int cols() const { return static_cast<int>(node_->value.cols()); }
  double item() const;
  bool defined() const { return node_ != nullptr; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/**
 * Records primitive operations for one forward pass. With recording off
 * (inference) only forward values are computed.
 */
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return entries_.size(); }

  Tensor constant(Mat value) { return Tensor::constant(std::move(value)); }

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double s);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor square(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor concat_rows(const std::vector<Tensor>& parts);
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor slice_rows(const Tensor& a, int start, int count);
  Tensor slice_cols(const Tensor& a, int start, int count);
  Tensor transpose(const Tensor& a);
  Tensor softmax_rows(const Tensor& a);
  /// Per-row (x - mean) / sqrt(var + eps) * gain + bias; gain and bias are 1 x cols.
  Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-12);
  /// x * w + b with w (in x out) and b (1 x out).
  Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
  /// Mean of squared differences over all elements, as a 1 x 1 tensor.
  Tensor mse(const Tensor& a, const Tensor& b);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  /// Adds the 1 x cols row to every row of `a`.
  Tensor add_row(const Tensor& a, const Tensor& row);
  /// Multiplies every row of `a` elementwise by the 1 x cols row.
  Tensor mul_row(const Tensor& a, const Tensor& row);
  /// Adds the first a.rows() rows of `table`.
  Tensor add_positional(const Tensor& a, const Tensor& table);
  /// Stacks `count` copies of a 1 x cols row.
  Tensor repeat_rows(const Tensor& row, int count);
  /// Scales every row to unit Euclidean norm.
  Tensor row_normalize(const Tensor& a);
  Tensor clamp(const Tensor& a, double lo, double hi);
  /// Squared geodesic angle between unit quaternion rows of p and q (n x 4 each),
  /// returned as n x 1. Invariant to the sign of either row.
  Tensor quat_geodesic_sq(const Tensor& p, const Tensor& q);

  /// Propagates d loss / d node into every reachable requires_grad leaf.
  /// Leaf gradients accumulate across calls.
  void backward(const Tensor& loss);

 private:
  Tensor make(Mat value, std::initializer_list<const Tensor*> inputs);
  void record(const Tensor& out, std::function<void(const Mat&)> rule);

  struct Entry {
    std::shared_ptr<Node> out;
    std::function<void(const Mat&)> rule;
  };
  bool record_;
  std::vector<Entry> entries_;
};

/// Scalar function of the given leaves, rebuilt on a fresh tape per call.
using LossFn = std::function<Tensor(Tape&)>;

/**
 * Compares reverse-mode gradients of `f` with central differences over every
 * coordinate of `leaves`. Returns max |g_ad - g_fd| / max(floor, |g_ad| + |g_fd|).
 * Each coordinate is differenced with steps eps and eps/10 and the closer
 * estimate counts, so a step that straddles a ReLU or clamp kink does not
 * fail a correct gradient. `floor` should sit above the finite-difference
 * noise |f| * 1e-16 / eps.
 * Leaf values are restored and their gradients cleared on return.
 */
double grad_check(const LossFn& f, const std::vector<Tensor>& leaves, double eps = 1e-5,
                  double floor = 1e-8);

/// Single-point form: `f` receives a variable holding `point`.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Mat& point,
                  double eps = 1e-5);

}  // namespace ilsrd::ad
