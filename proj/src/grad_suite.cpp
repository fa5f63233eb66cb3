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

#include "ilsrd/grad_suite.hpp"

#include <algorithm>
#include <functional>

#include "ilsrd/random.hpp"
#include "ilsrd/tensor.hpp"

namespace ilsrd::ad {

namespace {

Mat random_mat(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

using UnaryFn = std::function<Tensor(Tape&, const Tensor&)>;

struct Case {
  std::string name;
  UnaryFn op;
  int rows, cols;
  double lo = -1.0, hi = 1.0;
};

}  // namespace

std::vector<GradCheckResult> check_all_primitives(std::uint64_t seed, int points) {
  Rng rng(seed);
  const Tensor other = Tensor::constant(random_mat(rng, 4, 5));
  const Tensor right = Tensor::constant(random_mat(rng, 5, 3));
  const Tensor row = Tensor::constant(random_mat(rng, 1, 5));
  const Tensor table = Tensor::constant(random_mat(rng, 7, 5));
  const Tensor gain = Tensor::constant(random_mat(rng, 1, 5, 0.5, 1.5));
  const Tensor w = Tensor::constant(random_mat(rng, 5, 3));
  const Tensor b = Tensor::constant(random_mat(rng, 1, 3));
  const Tensor quats = Tensor::constant(random_mat(rng, 4, 4));

  const std::vector<Case> cases = {
      {"matmul(a)", [&](Tape& t, const Tensor& x) { return t.matmul(x, right); }, 4, 5},
      {"matmul(b)", [&](Tape& t, const Tensor& x) { return t.matmul(other, x); }, 5, 2},
      {"add", [&](Tape& t, const Tensor& x) { return t.add(x, other); }, 4, 5},
      {"sub", [&](Tape& t, const Tensor& x) { return t.sub(other, x); }, 4, 5},
      {"scale", [&](Tape& t, const Tensor& x) { return t.scale(x, -2.5); }, 4, 5},
      {"mul", [&](Tape& t, const Tensor& x) { return t.mul(x, other); }, 4, 5},
      {"mul(shared)", [&](Tape& t, const Tensor& x) { return t.mul(x, x); }, 4, 5},
      {"exp", [&](Tape& t, const Tensor& x) { return t.exp(x); }, 4, 5},
      {"log", [&](Tape& t, const Tensor& x) { return t.log(x); }, 4, 5, 0.2, 3.0},
      {"square", [&](Tape& t, const Tensor& x) { return t.square(x); }, 4, 5},
      {"relu", [&](Tape& t, const Tensor& x) { return t.relu(x); }, 4, 5},
      {"concat_rows", [&](Tape& t, const Tensor& x) { return t.concat_rows({other, x, x}); }, 2, 5},
      {"concat_cols", [&](Tape& t, const Tensor& x) { return t.concat_cols({x, other}); }, 4, 2},
      {"slice_rows", [&](Tape& t, const Tensor& x) { return t.slice_rows(x, 1, 2); }, 4, 5},
      {"slice_cols", [&](Tape& t, const Tensor& x) { return t.slice_cols(x, 2, 3); }, 4, 5},
      {"transpose", [&](Tape& t, const Tensor& x) { return t.transpose(x); }, 4, 5},
      {"softmax_rows", [&](Tape& t, const Tensor& x) { return t.softmax_rows(x); }, 4, 5, -3, 3},
      {"layer_norm(x)", [&](Tape& t, const Tensor& x) { return t.layer_norm(x, gain, row); }, 4, 5,
       -2, 2},
      {"layer_norm(gain)", [&](Tape& t, const Tensor& x) { return t.layer_norm(other, x, row); }, 1,
       5},
      {"layer_norm(bias)", [&](Tape& t, const Tensor& x) { return t.layer_norm(other, gain, x); },
       1, 5},
      {"linear(x)", [&](Tape& t, const Tensor& x) { return t.linear(x, w, b); }, 4, 5},
      {"linear(w)", [&](Tape& t, const Tensor& x) { return t.linear(other, x, b); }, 5, 3},
      {"linear(b)", [&](Tape& t, const Tensor& x) { return t.linear(other, w, x); }, 1, 3},
      {"mse", [&](Tape& t, const Tensor& x) { return t.mse(x, other); }, 4, 5},
      {"sum", [&](Tape& t, const Tensor& x) { return t.sum(x); }, 4, 5},
      {"mean", [&](Tape& t, const Tensor& x) { return t.mean(x); }, 4, 5},
      {"add_row(a)", [&](Tape& t, const Tensor& x) { return t.add_row(x, row); }, 4, 5},
      {"add_row(row)", [&](Tape& t, const Tensor& x) { return t.add_row(other, x); }, 1, 5},
      {"mul_row(a)", [&](Tape& t, const Tensor& x) { return t.mul_row(x, row); }, 4, 5},
      {"mul_row(row)", [&](Tape& t, const Tensor& x) { return t.mul_row(other, x); }, 1, 5},
      {"add_positional(a)", [&](Tape& t, const Tensor& x) { return t.add_positional(x, table); }, 4,
       5},
      {"add_positional(table)",
       [&](Tape& t, const Tensor& x) { return t.add_positional(other, x); }, 6, 5},
      {"repeat_rows", [&](Tape& t, const Tensor& x) { return t.repeat_rows(x, 4); }, 1, 5},
      {"row_normalize", [&](Tape& t, const Tensor& x) { return t.row_normalize(x); }, 4, 5},
      {"clamp", [&](Tape& t, const Tensor& x) { return t.clamp(x, -0.5, 0.5); }, 4, 5},
      {"quat_geodesic_sq",
       [&](Tape& t, const Tensor& x) {
         return t.quat_geodesic_sq(t.row_normalize(x), t.row_normalize(quats));
       },
       4, 4},
  };

  std::vector<GradCheckResult> out;
  for (const Case& c : cases) {
    GradCheckResult r{c.name, 0.0};
    for (int k = 0; k < points; ++k) {
      const Mat x = random_mat(rng, c.rows, c.cols, c.lo, c.hi);
      // A fixed random weighting makes every output element contribute.
      Tensor weights;
      const double err = grad_check(
          [&](Tape& t, const Tensor& v) {
            const Tensor y = c.op(t, v);
            if (!weights.defined()) {
              Rng wr(seed + 1000);
              weights = Tensor::constant(random_mat(wr, y.rows(), y.cols()));
            }
            return t.sum(t.mul(y, weights));
          },
          x);
      r.max_rel_error = std::max(r.max_rel_error, err);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace ilsrd::ad
