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

// Closed-loop episodes, episode metrics, and the evaluation/ablation suites.

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ilsrd/baselines.hpp"
#include "ilsrd/dataset.hpp"
#include "ilsrd/il_srd.hpp"
#include "ilsrd/temporal_aggregation.hpp"

namespace ilsrd {

/// Fixed initial-state seeds shared by every evaluated method.
inline const std::vector<std::uint64_t> kStandardSeeds = {101, 202, 303, 404, 505};

enum class ExecutionMode {
  kWrench,          ///< policy emits a wrench, propagated with rk4_step
  kCommandedState,  ///< policy emits the next state, adopted directly
};

std::string to_string(ExecutionMode m);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual ExecutionMode mode() const = 0;
  /// Clears per-episode state.
  virtual void reset() {}
  virtual ControlInput wrench(const RelativeState& observed);
  virtual RelativeState command(const RelativeState& observed);
};

class MpcPolicy : public Policy {
 public:
  explicit MpcPolicy(const mpc::Problem& pb) : controller_(pb) {}
  std::string name() const override { return "mpc"; }
  ExecutionMode mode() const override { return ExecutionMode::kWrench; }
  void reset() override { controller_.reset(); }
  ControlInput wrench(const RelativeState& observed) override { return controller_.step(observed); }

 private:
  mpc::MpcController controller_;
};

class PidPolicy : public Policy {
 public:
  PidPolicy(const PidConfig& cfg, const mpc::TargetState& target) : pid_(cfg, target) {}
  std::string name() const override { return "pid"; }
  ExecutionMode mode() const override { return ExecutionMode::kWrench; }
  void reset() override { pid_.reset(); }
  ControlInput wrench(const RelativeState& observed) override { return pid_.step(observed); }

 private:
  PidController pid_;
};

class BcPolicy : public Policy {
 public:
  explicit BcPolicy(std::shared_ptr<const BcModel> model) : model_(std::move(model)) {}
  std::string name() const override { return "bc"; }
  ExecutionMode mode() const override { return ExecutionMode::kCommandedState; }
  RelativeState command(const RelativeState& observed) override;

 private:
  std::shared_ptr<const BcModel> model_;
};

/// Predicts a sequence every step; executes the aggregated frame, or the
/// first frame of the newest prediction when aggregation is disabled.
class IlSrdPolicy : public Policy {
 public:
  IlSrdPolicy(std::shared_ptr<const IlSrdModel> model, bool temporal_aggregation,
              std::string name = "ilsrd");
  std::string name() const override { return name_; }
  ExecutionMode mode() const override { return ExecutionMode::kCommandedState; }
  void reset() override;
  RelativeState command(const RelativeState& observed) override;

 private:
  std::shared_ptr<const IlSrdModel> model_;
  bool aggregate_;
  std::string name_;
  AggregationBuffer buffer_;
  long step_ = 0;
};

/// One closed-loop run. states has N+1 entries, observed N; controls holds
/// the commanded wrench in wrench mode and is empty otherwise.
struct EpisodeRecord {
  std::string policy;
  std::uint64_t seed = 0;
  ExecutionMode mode = ExecutionMode::kWrench;
  std::vector<RelativeState> states;
  std::vector<RelativeState> observed;
  std::vector<ControlInput> controls;
  bool diverged = false;
  std::string diverged_reason;

  long steps() const { return static_cast<long>(states.size()) - 1; }
};

/// Observation noise is drawn from `noise_rng` once per step. A non-finite
/// state ends the episode early with `diverged` set.
EpisodeRecord run_episode(Policy& policy, const RelativeState& initial, int steps,
                          const NoiseConfig& noise, Rng& noise_rng, const mpc::Problem& pb,
                          std::uint64_t seed = 0);

/// Force (N, LVLH) and torque (N m, body) per step index.
struct WrenchSeries {
  std::vector<long> index;
  std::vector<Vec3> force;
  std::vector<Vec3> torque;
};

/// Central-difference reconstruction at interior steps 1 .. N-1:
/// F = m (v' - gravity_accel), tau = J w' + w x (J w). Throws for N < 2.
WrenchSeries reconstruct_wrench(const EpisodeRecord& rec, const mpc::Problem& pb);

/// Commanded wrench at steps 0 .. N-1 (force = m f). Wrench mode only.
WrenchSeries commanded_wrench(const EpisodeRecord& rec, const mpc::Problem& pb);

struct Energy {
  double w_force = 0;
  double w_torque = 0;
  double sec = 0;
};

/// W_F = sum |F_t * (r_t+1 - r_t)|_1, W_tau = sum |tau_t * dtheta_t|_1 with
/// dtheta_t the rotation vector of q_t^-1 q_t+1; SEC = (W_F + W_tau) / N.
Energy episode_energy(const EpisodeRecord& rec, const WrenchSeries& w);

/// |dr| + |dv| + alpha(q, q_ref)^2 + |dw|.
double step_error(const RelativeState& s, const RelativeState& ref);

/// 1-based start of the earliest 20-step window over s_1 .. s_N with the
/// least mean step_error against s_N. Throws for N < 20.
long convergence_step(const EpisodeRecord& rec);

struct Precision {
  double ttp = 0;  ///< |r_N - r_hat| + |v_N|
  double trp = 0;  ///< alpha(q_N, q_hat)^2 + |w_N|
};

Precision terminal_precision(const EpisodeRecord& rec, const mpc::TargetState& target);

/// -(1/N) sum over s_1 .. s_N of step_error(s_t, target).
double episodic_stepwise_reward(const EpisodeRecord& rec, const mpc::TargetState& target);

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  long steps = 0;
  long cs = 0;
  double sec = 0;
  double ttp = 0;
  double trp = 0;
  double esr = 0;
  bool diverged = false;
};

/// SEC uses the commanded wrench in wrench mode and reconstruction otherwise.
EpisodeMetrics compute_metrics(const EpisodeRecord& rec, const mpc::Problem& pb);

struct Stat {
  double mean = 0;
  double std = 0;  ///< sample standard deviation (n - 1)
};

struct ReportRow {
  std::string policy;
  std::string condition;
  std::vector<EpisodeMetrics> episodes;
  std::string skipped;  ///< non-empty when the policy could not be run
  Stat cs, sec, ttp, trp, esr;

  void summarize();
};

struct Condition {
  std::string name;
  NoiseConfig noise;
  int stream = 0;  ///< selects the noise stream; keep fixed per condition name
};

struct SuiteConfig {
  std::vector<std::uint64_t> seeds = kStandardSeeds;
  int steps = 2500;
  std::vector<Condition> conditions = {{"nominal", NoiseConfig::off(), 0},
                                       {"disturbed", NoiseConfig::robustness(), 1}};
  int jobs = 1;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

struct PolicyEntry {
  std::string name;
  PolicyFactory make;    ///< empty when `skipped` explains why
  std::string skipped;
};

using EpisodeSink = std::function<void(const std::string& condition, const EpisodeRecord&)>;

/// Every policy on every condition and seed. Initial states come from
/// sample_initial_state(seed); the noise stream of an episode depends only on
/// (seed, condition stream), so all methods see the same perturbations.
/// Results do not depend on `jobs`.
std::vector<ReportRow> evaluate_suite(const std::vector<PolicyEntry>& policies,
                                      const SuiteConfig& cfg, const mpc::Problem& pb,
                                      const EpisodeSink& sink = {});

nlohmann::json report_to_json(const std::vector<ReportRow>& rows, const nlohmann::json& meta = {});

/// Per-step CSV: states, observed states, wrench and step error to the target.
void write_episode_csv(const std::filesystem::path& path, const EpisodeRecord& rec,
                       const mpc::Problem& pb);

/// One ablation row: model overrides relative to the base configuration.
struct AblationVariant {
  std::string name;
  std::function<void(ModelConfig&)> adjust;
  bool temporal_aggregation = true;
};

/// Full model, n in {100, 200, 400, 600}, zero and learnable decoder
/// targets, and the full model without temporal aggregation.
std::vector<AblationVariant> default_ablations();

/// Trains each distinct configuration once and evaluates every variant on
/// the nominal condition of `suite`.
std::vector<ReportRow> run_ablation(const std::vector<Demonstration>& demos, const ModelConfig& base,
                                    std::uint64_t seed, const std::vector<AblationVariant>& variants,
                                    const SuiteConfig& suite, const mpc::Problem& pb,
                                    const TrainOptions& opts = {});

}  // namespace ilsrd
