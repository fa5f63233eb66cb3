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

#include "ilsrd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ilsrd::ad {

namespace {

std::string shape(const Mat& m) {
  std::ostringstream s;
  s << "(" << m.rows() << "x" << m.cols() << ")";
  return s.str();
}

[[noreturn]] void mismatch(const char* op, const Mat& a, const Mat& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols()) {
    mismatch(op, a.value(), b.value());
  }
}

void require_row(const char* op, const Tensor& a, const Tensor& row) {
  if (row.value().rows() != 1 || row.value().cols() != a.value().cols()) {
    mismatch(op, a.value(), row.value());
  }
}

}  // namespace

void Node::accumulate(const Mat& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Tensor Tensor::variable(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

Tensor Tensor::constant(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Mat Tensor::grad() const {
  if (node_->grad.size() == 0) return Mat::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

double Tensor::item() const {
  if (node_->value.size() != 1) throw ShapeError("item: tensor is not scalar " + shape(value()));
  return node_->value(0, 0);
}

Tensor Tape::make(Mat value, std::initializer_list<const Tensor*> inputs) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->leaf = false;
  if (record_) {
    for (const Tensor* t : inputs) n->requires_grad |= t->requires_grad();
  }
  return Tensor(std::move(n));
}

void Tape::record(const Tensor& out, std::function<void(const Mat&)> rule) {
  if (out.requires_grad()) entries_.push_back({out.node(), std::move(rule)});
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a.value(), b.value());
  Tensor out = make(a.value() * b.value(), {&a, &b});
  auto na = a.node(), nb = b.node();
  record(out, [na, nb](const Mat& g) {
    if (na->requires_grad) na->accumulate(g * nb->value.transpose());
    if (nb->requires_grad) nb->accumulate(na->value.transpose() * g);
  });
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  Tensor out = make(a.value() + b.value(), {&a, &b});
  auto na = a.node(), nb = b.node();
  record(out, [na, nb](const Mat& g) {
    na->accumulate(g);
    nb->accumulate(g);
  });
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  Tensor out = make(a.value() - b.value(), {&a, &b});
  auto na = a.node(), nb = b.node();
  record(out, [na, nb](const Mat& g) {
    na->accumulate(g);
    if (nb->requires_grad) nb->accumulate(-g);
  });
  return out;
}

Tensor Tape::scale(const Tensor& a, double s) {
  Tensor out = make(s * a.value(), {&a});
  auto na = a.node();
  record(out, [na, s](const Mat& g) { na->accumulate(s * g); });
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  Tensor out = make(a.value().cwiseProduct(b.value()), {&a, &b});
  auto na = a.node(), nb = b.node();
  record(out, [na, nb](const Mat& g) {
    if (na->requires_grad) na->accumulate(g.cwiseProduct(nb->value));
    if (nb->requires_grad) nb->accumulate(g.cwiseProduct(na->value));
  });
  return out;
}

Tensor Tape::exp(const Tensor& a) {
  Tensor out = make(a.value().array().exp().matrix(), {&a});
  auto na = a.node();
  auto no = out.node();
  record(out, [na, no = std::weak_ptr<Node>(no)](const Mat& g) {
    na->accumulate(g.cwiseProduct(no.lock()->value));
  });
  return out;
}

Tensor Tape::log(const Tensor& a) {
  if ((a.value().array() <= 0).any()) throw Error("log: non-positive input");
  Tensor out = make(a.value().array().log().matrix(), {&a});
  auto na = a.node();
  record(out, [na](const Mat& g) { na->accumulate(g.cwiseQuotient(na->value)); });
  return out;
}

Tensor Tape::square(const Tensor& a) {
  Tensor out = make(a.value().cwiseAbs2(), {&a});
  auto na = a.node();
  record(out, [na](const Mat& g) { na->accumulate(2.0 * g.cwiseProduct(na->value)); });
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  Tensor out = make(a.value().cwiseMax(0.0), {&a});
  auto na = a.node();
  record(out, [na](const Mat& g) {
    na->accumulate((na->value.array() > 0).select(g, 0.0).matrix());
  });
  return out;
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int cols = parts.front().cols();
  int rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) mismatch("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  Mat v(rows, cols);
  int r = 0;
  bool rg = false;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    rg |= p.requires_grad();
  }
  Tensor out = make(std::move(v), {});
  if (!record_ || !rg) return out;
  out.node()->requires_grad = true;
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  record(out, [nodes](const Mat& g) {
    int r0 = 0;
    for (const auto& n : nodes) {
      const int k = static_cast<int>(n->value.rows());
      if (n->requires_grad) n->accumulate(g.middleRows(r0, k));
      r0 += k;
    }
  });
  return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = parts.front().rows();
  int cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) mismatch("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Mat v(rows, cols);
  int c = 0;
  bool rg = false;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    rg |= p.requires_grad();
  }
  Tensor out = make(std::move(v), {});
  if (!record_ || !rg) return out;
  out.node()->requires_grad = true;
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  record(out, [nodes](const Mat& g) {
    int c0 = 0;
    for (const auto& n : nodes) {
      const int k = static_cast<int>(n->value.cols());
      if (n->requires_grad) n->accumulate(g.middleCols(c0, k));
      c0 += k;
    }
  });
  return out;
}

Tensor Tape::slice_rows(const Tensor& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + shape(a.value()));
  }
  Tensor out = make(a.value().middleRows(start, count), {&a});
  auto na = a.node();
  record(out, [na, start, count](const Mat& g) {
    Mat full = Mat::Zero(na->value.rows(), na->value.cols());
    full.middleRows(start, count) = g;
    na->accumulate(full);
  });
  return out;
}

Tensor Tape::slice_cols(const Tensor& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: cols [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + shape(a.value()));
  }
  Tensor out = make(a.value().middleCols(start, count), {&a});
  auto na = a.node();
  record(out, [na, start, count](const Mat& g) {
    Mat full = Mat::Zero(na->value.rows(), na->value.cols());
    full.middleCols(start, count) = g;
    na->accumulate(full);
  });
  return out;
}

Tensor Tape::transpose(const Tensor& a) {
  Tensor out = make(a.value().transpose(), {&a});
  auto na = a.node();
  record(out, [na](const Mat& g) { na->accumulate(g.transpose()); });
  return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  Mat y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  Tensor out = make(std::move(y), {&a});
  auto na = a.node();
  record(out, [na, no = std::weak_ptr<Node>(out.node())](const Mat& g) {
    const Mat& y = no.lock()->value;
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Mat d = g;
    d.colwise() -= dots;
    na->accumulate(d.cwiseProduct(y));
  });
  return out;
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_row("layer_norm", x, gain);
  require_row("layer_norm", x, bias);
  const Eigen::Index n = x.value().rows(), c = x.value().cols();
  Mat xhat(n, c);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.value().row(r).mean();
    const auto centered = (x.value().row(r).array() - mu).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(c);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = centered * inv_std[r];
  }
  Mat y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  Tensor out = make(std::move(y), {&x, &gain, &bias});
  auto nx = x.node(), ng = gain.node(), nb = bias.node();
  record(out, [nx, ng, nb, xhat = std::move(xhat), inv_std](const Mat& g) {
    if (ng->requires_grad) ng->accumulate(g.cwiseProduct(xhat).colwise().sum());
    if (nb->requires_grad) nb->accumulate(g.colwise().sum());
    if (!nx->requires_grad) return;
    Mat dxhat = g;
    dxhat.array().rowwise() *= ng->value.row(0).array();
    const double c = static_cast<double>(dxhat.cols());
    const Eigen::VectorXd m1 = dxhat.rowwise().sum() / c;
    const Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / c;
    Mat dx = dxhat;
    dx.colwise() -= m1;
    dx -= (xhat.array().colwise() * m2.array()).matrix();
    dx.array().colwise() *= inv_std.array();
    nx->accumulate(dx);
  });
  return out;
}

Tensor Tape::linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols() != w.rows()) mismatch("linear", x.value(), w.value());
  if (b.rows() != 1 || b.cols() != w.cols()) mismatch("linear", w.value(), b.value());
  Mat y = x.value() * w.value();
  y.rowwise() += b.value().row(0);
  Tensor out = make(std::move(y), {&x, &w, &b});
  auto nx = x.node(), nw = w.node(), nb = b.node();
  record(out, [nx, nw, nb](const Mat& g) {
    if (nx->requires_grad) nx->accumulate(g * nw->value.transpose());
    if (nw->requires_grad) nw->accumulate(nx->value.transpose() * g);
    if (nb->requires_grad) nb->accumulate(g.colwise().sum());
  });
  return out;
}

Tensor Tape::mse(const Tensor& a, const Tensor& b) {
  require_same("mse", a, b);
  const double n = static_cast<double>(a.value().size());
  Mat diff = a.value() - b.value();
  Mat v(1, 1);
  v(0, 0) = diff.squaredNorm() / n;
  Tensor out = make(std::move(v), {&a, &b});
  auto na = a.node(), nb = b.node();
  record(out, [na, nb, diff = std::move(diff), n](const Mat& g) {
    const Mat d = (2.0 * g(0, 0) / n) * diff;
    na->accumulate(d);
    if (nb->requires_grad) nb->accumulate(-d);
  });
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  Tensor out = make(std::move(v), {&a});
  auto na = a.node();
  record(out, [na](const Mat& g) {
    na->accumulate(Mat::Constant(na->value.rows(), na->value.cols(), g(0, 0)));
  });
  return out;
}

Tensor Tape::mean(const Tensor& a) {
  const double n = static_cast<double>(a.value().size());
  Mat v(1, 1);
  v(0, 0) = a.value().sum() / n;
  Tensor out = make(std::move(v), {&a});
  auto na = a.node();
  record(out, [na, n](const Mat& g) {
    na->accumulate(Mat::Constant(na->value.rows(), na->value.cols(), g(0, 0) / n));
  });
  return out;
}

Tensor Tape::add_row(const Tensor& a, const Tensor& row) {
  require_row("add_row", a, row);
  Mat y = a.value();
  y.rowwise() += row.value().row(0);
  Tensor out = make(std::move(y), {&a, &row});
  auto na = a.node(), nr = row.node();
  record(out, [na, nr](const Mat& g) {
    na->accumulate(g);
    if (nr->requires_grad) nr->accumulate(g.colwise().sum());
  });
  return out;
}

Tensor Tape::mul_row(const Tensor& a, const Tensor& row) {
  require_row("mul_row", a, row);
  Mat y = a.value();
  y.array().rowwise() *= row.value().row(0).array();
  Tensor out = make(std::move(y), {&a, &row});
  auto na = a.node(), nr = row.node();
  record(out, [na, nr](const Mat& g) {
    if (na->requires_grad) {
      Mat d = g;
      d.array().rowwise() *= nr->value.row(0).array();
      na->accumulate(d);
    }
    if (nr->requires_grad) nr->accumulate(g.cwiseProduct(na->value).colwise().sum());
  });
  return out;
}

Tensor Tape::add_positional(const Tensor& a, const Tensor& table) {
  if (table.cols() != a.cols() || table.rows() < a.rows()) {
    mismatch("add_positional", a.value(), table.value());
  }
  Tensor out = make(a.value() + table.value().topRows(a.rows()), {&a, &table});
  auto na = a.node(), nt = table.node();
  record(out, [na, nt](const Mat& g) {
    na->accumulate(g);
    if (nt->requires_grad) {
      Mat full = Mat::Zero(nt->value.rows(), nt->value.cols());
      full.topRows(g.rows()) = g;
      nt->accumulate(full);
    }
  });
  return out;
}

Tensor Tape::repeat_rows(const Tensor& row, int count) {
  if (row.rows() != 1) throw ShapeError("repeat_rows: expected a single row, got " + shape(row.value()));
  if (count < 1) throw ShapeError("repeat_rows: count must be positive");
  Tensor out = make(row.value().replicate(count, 1), {&row});
  auto nr = row.node();
  record(out, [nr](const Mat& g) { nr->accumulate(g.colwise().sum()); });
  return out;
}

Tensor Tape::row_normalize(const Tensor& a) {
  const Eigen::VectorXd norms = a.value().rowwise().norm();
  if ((norms.array() == 0).any()) throw Error("row_normalize: zero row");
  Mat y = a.value();
  y.array().colwise() /= norms.array();
  Tensor out = make(y, {&a});
  auto na = a.node();
  record(out, [na, y = std::move(y), norms](const Mat& g) {
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Mat d = g - (y.array().colwise() * dots.array()).matrix();
    d.array().colwise() /= norms.array();
    na->accumulate(d);
  });
  return out;
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
  Tensor out = make(a.value().cwiseMax(lo).cwiseMin(hi), {&a});
  auto na = a.node();
  record(out, [na, lo, hi](const Mat& g) {
    const auto inside = na->value.array() > lo && na->value.array() < hi;
    na->accumulate(inside.select(g, 0.0).matrix());
  });
  return out;
}

Tensor Tape::quat_geodesic_sq(const Tensor& p, const Tensor& q) {
  require_same("quat_geodesic_sq", p, q);
  if (p.cols() != 4) throw ShapeError("quat_geodesic_sq: expected 4 columns, got " + shape(p.value()));
  const Eigen::Index n = p.value().rows();
  Mat v(n, 1);
  // d(alpha^2)/d(dot) per row.
  Eigen::VectorXd slope(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto pr = p.value().row(r);
    const auto qr = q.value().row(r);
    const double d = pr.dot(qr);
    // Half-angle from chord lengths stays accurate near coincidence.
    const double sign = d < 0 ? -1.0 : 1.0;
    const double theta = 2.0 * std::atan2((pr - sign * qr).norm(), (pr + sign * qr).norm());
    v(r, 0) = 4.0 * theta * theta;
    const double s = std::sin(theta);
    // theta / sin(theta) -> 1 as theta -> 0.
    const double ratio = s > 1e-8 ? theta / s : 1.0;
    slope[r] = -8.0 * sign * ratio;
  }
  Tensor out = make(std::move(v), {&p, &q});
  auto np = p.node(), nq = q.node();
  record(out, [np, nq, slope](const Mat& g) {
    const Eigen::VectorXd w = g.col(0).cwiseProduct(slope);
    if (np->requires_grad) np->accumulate((nq->value.array().colwise() * w.array()).matrix());
    if (nq->requires_grad) nq->accumulate((np->value.array().colwise() * w.array()).matrix());
  });
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape(loss.value()));
  }
  if (!record_) throw Error("backward: tape was not recording");
  if (!loss.requires_grad()) return;
  for (auto& e : entries_) e.out->grad.resize(0, 0);
  loss.node()->accumulate(Mat::Ones(1, 1));
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->out->grad.size() == 0) continue;
    it->rule(it->out->grad);
  }
}

double grad_check(const LossFn& f, const std::vector<Tensor>& leaves, double eps,
                  double floor) {
  std::vector<Tensor> ls = leaves;
  for (auto& l : ls) l.zero_grad();
  {
    Tape tape;
    tape.backward(f(tape));
  }
  double worst = 0.0;
  for (auto& l : ls) {
    const Mat analytic = l.grad();
    Mat& v = l.mutable_value();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double orig = v.data()[i];
      const double ad = analytic.data()[i];
      double err = INFINITY;
      for (const double h : {eps, 0.1 * eps}) {
        v.data()[i] = orig + h;
        double fp, fm;
        {
          Tape t(false);
          fp = f(t).item();
        }
        v.data()[i] = orig - h;
        {
          Tape t(false);
          fm = f(t).item();
        }
        v.data()[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        err = std::min(err, std::abs(ad - fd) / std::max(floor, std::abs(ad) + std::abs(fd)));
      }
      worst = std::max(worst, err);
    }
    l.zero_grad();
  }
  return worst;
}

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Mat& point,
                  double eps) {
  Tensor x = Tensor::variable(point);
  return grad_check([&](Tape& t) { return f(t, x); }, {x}, eps);
}

}  // namespace ilsrd::ad
