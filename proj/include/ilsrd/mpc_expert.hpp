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

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ilsrd/orbital_dynamics.hpp"

namespace ilsrd::mpc {

/// Docking configuration: r_hat, q_hat with zero terminal rates.
struct TargetState {
  Vec3 r_hat{2.0, 0.0, 0.0};
  Quaternion q_hat{};

  RelativeState as_state() const;
  void validate() const;
};

using ErrorVector = Eigen::Matrix<double, 13, 1>;
using StateWeights = Eigen::Matrix<double, 13, 1>;
using ControlWeights = Eigen::Matrix<double, 6, 1>;

/// e = [r - r_hat; v; e_q deviation (1 - w, x, y, z); omega] where
/// e_q = q_hat^-1 ⊗ q flipped to the positive-scalar hemisphere.
ErrorVector error_vector(const RelativeState& s, const TargetState& target);

/**
 * Receding-horizon settings. Q, R and P are diagonal weights over the error
 * vector and the 6 control channels.
 */
struct MpcConfig {
  int prediction_horizon = 30;  ///< Np
  int control_horizon = 10;     ///< Nc
  StateWeights Q = default_q();
  ControlWeights R = (ControlWeights() << 10, 10, 10, 0.1, 0.1, 0.1).finished();
  StateWeights P = 20.0 * default_q();
  ControlArray u_min{-0.2, -0.2, -0.2, -8.0, -8.0, -8.0};
  ControlArray u_max{0.2, 0.2, 0.2, 8.0, 8.0, 8.0};
  int sqp_iters = 3;
  double step_tol = 1e-6;

  static StateWeights default_q();
  /// Throws ConfigError for Nc > Np, negative weights, non-positive R, empty box.
  void validate() const;
};

/// Everything the rollout needs besides the decision variables.
struct Problem {
  OrbitConfig orbit;
  SpacecraftParams params;
  MpcConfig cfg;
  TargetState target;
};

using ControlSequence = std::vector<ControlInput>;

/// Tracking cost of applying `u_seq` (length Nc, last entry held to Np)
/// from s0 under rk4_step. Throws Error("horizon diverged") on non-finite rollout.
double trajectory_cost(const RelativeState& s0, const ControlSequence& u_seq, const Problem& pb);

struct SolveResult {
  ControlSequence u;                  ///< length Nc
  std::vector<double> cost_history;   ///< cost before the first and after every iteration
  int iterations = 0;
  bool flagged = false;               ///< line search could not make progress
};

/**
 * Single-shooting Gauss-Newton SQP with forward-difference Jacobians of the
 * rollout residual. Bounds are handled by freezing active variables and a
 * projected backtracking line search, so every returned control is inside
 * the box and the cost never increases across iterations.
 */
class SqpSolver {
 public:
  explicit SqpSolver(Problem problem);

  SolveResult solve(const RelativeState& s0, const ControlSequence& warm_start) const;
  const Problem& problem() const { return pb_; }

 private:
  Problem pb_;
  Eigen::VectorXd sqrt_q_;
  Eigen::VectorXd sqrt_r_;
  Eigen::VectorXd sqrt_p_;
};

/// Stateful receding-horizon controller that shifts its warm start each call.
class MpcController {
 public:
  explicit MpcController(Problem problem);

  ControlInput step(const RelativeState& observed);
  void reset() { warm_.clear(); }

  const SolveResult& last_result() const { return last_; }
  long flagged_steps() const { return flagged_; }
  long steps() const { return steps_; }

 private:
  SqpSolver solver_;
  ControlSequence warm_;
  SolveResult last_;
  long flagged_ = 0;
  long steps_ = 0;
};

}  // namespace ilsrd::mpc
