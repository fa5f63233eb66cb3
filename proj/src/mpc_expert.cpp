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

#include "ilsrd/mpc_expert.hpp"

#include <limits>

namespace ilsrd::mpc {

RelativeState TargetState::as_state() const {
  RelativeState s;
  s.r = r_hat;
  s.q = q_hat;
  return s;
}

void TargetState::validate() const {
  if (!r_hat.allFinite()) throw ConfigError("target position must be finite");
  if (std::abs(q_hat.norm() - 1.0) > 1e-9) throw ConfigError("target quaternion must be unit norm");
}

ErrorVector error_vector(const RelativeState& s, const TargetState& target) {
  const Quaternion eq = (target.q_hat.conjugate() * s.q).positive_hemisphere();
  ErrorVector e;
  e << s.r - target.r_hat, s.v, 1.0 - eq.w, eq.x, eq.y, eq.z, s.omega;
  return e;
}

StateWeights MpcConfig::default_q() {
  StateWeights q;
  q << 1, 1, 1, 10, 10, 10, 50, 50, 50, 50, 20, 20, 20;
  return q;
}

void MpcConfig::validate() const {
  if (prediction_horizon < 1 || control_horizon < 1) {
    throw ConfigError("mpc: horizons must be at least 1");
  }
  if (control_horizon > prediction_horizon) {
    throw ConfigError("mpc: control horizon Nc must not exceed prediction horizon Np");
  }
  if ((Q.array() < 0).any() || (P.array() < 0).any()) {
    throw ConfigError("mpc: Q and P must be positive semidefinite");
  }
  if ((R.array() <= 0).any()) throw ConfigError("mpc: R must be positive definite");
  for (std::size_t i = 0; i < kControlDim; ++i) {
    if (!(u_min[i] < u_max[i])) throw ConfigError("mpc: u_min must be below u_max");
  }
  if (sqp_iters < 1) throw ConfigError("mpc: sqp_iters must be at least 1");
  if (!(step_tol >= 0)) throw ConfigError("mpc: step_tol must be non-negative");
}

namespace {

ControlInput control_at(const Eigen::VectorXd& U, int t, int nc) {
  const int k = std::min(t, nc - 1);
  return {U.segment<3>(6 * k), U.segment<3>(6 * k + 3)};
}

// Propagates states[from .. Np] in place; states[from] must already be set.
void rollout(const Problem& pb, const Eigen::VectorXd& U, std::vector<RelativeState>& states,
             int from) {
  const int np = pb.cfg.prediction_horizon;
  const int nc = pb.cfg.control_horizon;
  try {
    for (int t = from; t < np; ++t) {
      states[t + 1] = rk4_step(states[t], control_at(U, t, nc), pb.orbit, pb.params);
    }
  } catch (const IntegrationDiverged&) {
    throw Error("horizon diverged");
  }
}

void residual(const Problem& pb, const Eigen::VectorXd& sqrt_q, const Eigen::VectorXd& sqrt_r,
              const Eigen::VectorXd& sqrt_p, const std::vector<RelativeState>& states,
              const Eigen::VectorXd& U, Eigen::VectorXd& out) {
  const int np = pb.cfg.prediction_horizon;
  const int nc = pb.cfg.control_horizon;
  for (int t = 0; t < np; ++t) {
    out.segment<13>(19 * t) = sqrt_q.cwiseProduct(error_vector(states[t], pb.target));
    const int k = std::min(t, nc - 1);
    out.segment<6>(19 * t + 13) = sqrt_r.cwiseProduct(U.segment<6>(6 * k));
  }
  out.tail<13>() = sqrt_p.cwiseProduct(error_vector(states[np], pb.target));
}

Eigen::VectorXd pack(const ControlSequence& u, int nc) {
  Eigen::VectorXd U = Eigen::VectorXd::Zero(6 * nc);
  for (int k = 0; k < nc && k < static_cast<int>(u.size()); ++k) {
    U.segment<3>(6 * k) = u[k].f;
    U.segment<3>(6 * k + 3) = u[k].tau;
  }
  return U;
}

ControlSequence unpack(const Eigen::VectorXd& U, int nc) {
  ControlSequence u(nc);
  for (int k = 0; k < nc; ++k) u[k] = control_at(U, k, nc);
  return u;
}

}  // namespace

double trajectory_cost(const RelativeState& s0, const ControlSequence& u_seq, const Problem& pb) {
  const int np = pb.cfg.prediction_horizon;
  const int nc = pb.cfg.control_horizon;
  if (static_cast<int>(u_seq.size()) != nc) {
    throw Error("trajectory_cost: control sequence length must equal Nc");
  }
  std::vector<RelativeState> states(np + 1);
  states[0] = s0;
  const Eigen::VectorXd U = pack(u_seq, nc);
  rollout(pb, U, states, 0);
  Eigen::VectorXd res(19 * np + 13);
  residual(pb, pb.cfg.Q.cwiseSqrt(), pb.cfg.R.cwiseSqrt(), pb.cfg.P.cwiseSqrt(), states, U, res);
  const double J = res.squaredNorm();
  if (!std::isfinite(J)) throw Error("horizon diverged");
  return J;
}

SqpSolver::SqpSolver(Problem problem) : pb_(std::move(problem)) {
  pb_.orbit.validate();
  pb_.cfg.validate();
  pb_.target.validate();
  sqrt_q_ = pb_.cfg.Q.cwiseSqrt();
  sqrt_r_ = pb_.cfg.R.cwiseSqrt();
  sqrt_p_ = pb_.cfg.P.cwiseSqrt();
}

SolveResult SqpSolver::solve(const RelativeState& s0, const ControlSequence& warm_start) const {
  const int np = pb_.cfg.prediction_horizon;
  const int nc = pb_.cfg.control_horizon;
  const int n = 6 * nc;
  const int m = 19 * np + 13;

  Eigen::VectorXd lo(n), hi(n);
  for (int k = 0; k < nc; ++k) {
    for (int j = 0; j < 6; ++j) {
      lo[6 * k + j] = pb_.cfg.u_min[j];
      hi[6 * k + j] = pb_.cfg.u_max[j];
    }
  }
  Eigen::VectorXd U = pack(warm_start, nc).cwiseMax(lo).cwiseMin(hi);

  std::vector<RelativeState> states(np + 1), trial(np + 1);
  states[0] = s0;
  trial[0] = s0;
  Eigen::VectorXd res(m), res_trial(m);
  rollout(pb_, U, states, 0);
  residual(pb_, sqrt_q_, sqrt_r_, sqrt_p_, states, U, res);
  double cost = res.squaredNorm();

  SolveResult out;
  out.cost_history.push_back(cost);
  Eigen::MatrixXd Jac(m, n);

  for (int it = 0; it < pb_.cfg.sqp_iters; ++it) {
    // Forward-difference Jacobian; perturbing u_k leaves states[0..k] intact.
    for (int i = 0; i < n; ++i) {
      const int k = i / 6;
      const double h = 1e-6 * std::max(1.0, std::abs(U[i]));
      Eigen::VectorXd Up = U;
      Up[i] += h;
      std::copy(states.begin(), states.begin() + k + 1, trial.begin());
      rollout(pb_, Up, trial, k);
      residual(pb_, sqrt_q_, sqrt_r_, sqrt_p_, trial, Up, res_trial);
      Jac.col(i) = (res_trial - res) / h;
    }
    const Eigen::VectorXd g = Jac.transpose() * res;
    const Eigen::MatrixXd H = Jac.transpose() * Jac;

    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    std::vector<int> free;
    free.reserve(n);
    for (int i = 0; i < n; ++i) {
      const bool at_lo = U[i] <= lo[i] && g[i] > 0;
      const bool at_hi = U[i] >= hi[i] && g[i] < 0;
      if (!at_lo && !at_hi) free.push_back(i);
    }
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    if (!free.empty()) {
      const int nf = static_cast<int>(free.size());
      Eigen::MatrixXd Hf(nf, nf);
      Eigen::VectorXd gf(nf);
      for (int a = 0; a < nf; ++a) {
        gf[a] = g[free[a]];
        for (int b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
      }
      Hf.diagonal().array() += 1e-12 * (1.0 + Hf.diagonal().maxCoeff());
      const Eigen::VectorXd df = Hf.ldlt().solve(-gf);
      for (int a = 0; a < nf; ++a) step[free[a]] = df[a];
    }

    bool accepted = false;
    Eigen::VectorXd U_new;
    double alpha = 1.0;
    for (int ls = 0; ls < 20; ++ls, alpha *= 0.5) {
      U_new = (U + alpha * step).cwiseMax(lo).cwiseMin(hi);
      rollout(pb_, U_new, trial, 0);
      residual(pb_, sqrt_q_, sqrt_r_, sqrt_p_, trial, U_new, res_trial);
      const double c = res_trial.squaredNorm();
      if (std::isfinite(c) && c < cost) {
        accepted = true;
        cost = c;
        res = res_trial;
        std::swap(states, trial);
        trial[0] = s0;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      // Only a failure if the linear model promised a meaningful decrease.
      const double predicted = -g.dot(step);
      if (predicted > 1e-10 * (1.0 + cost)) out.flagged = true;
      out.cost_history.push_back(cost);
      break;
    }
    const double moved = (U_new - U).cwiseAbs().maxCoeff();
    U = U_new;
    out.cost_history.push_back(cost);
    if (moved < pb_.cfg.step_tol) break;
  }
  out.u = unpack(U, nc);
  return out;
}

MpcController::MpcController(Problem problem) : solver_(std::move(problem)) {}

ControlInput MpcController::step(const RelativeState& observed) {
  last_ = solver_.solve(observed, warm_);
  ++steps_;
  if (last_.flagged) ++flagged_;
  warm_.assign(last_.u.begin() + 1, last_.u.end());
  warm_.push_back(last_.u.back());
  return last_.u.front();
}

}  // namespace ilsrd::mpc
