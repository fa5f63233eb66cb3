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

// Acceptance checks, one PASS/FAIL/SKIPPED line per criterion.
//
//   ilsrd_acceptance [--only 1,4,5] [--work DIR]
//
// Criterion 7 (full-scale training, many hours) runs only when
// ILSRD_ACCEPT_FULL=1. Exit status is 0 iff no executed criterion failed.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "ilsrd/evaluation.hpp"
#include "ilsrd/grad_suite.hpp"
#include "ilsrd/run_config.hpp"

namespace fs = std::filesystem;
using namespace ilsrd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  enum Kind { kPass, kFail, kSkipped } kind;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void progress(const std::string& msg) { std::cerr << "[acceptance] " << msg << std::endl; }

void write_json(const fs::path& p, const Json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << j.dump(2) << "\n";
}

// 1. RK4 z-channel against cos(n0 t); quaternion norm over 2500 steps.
Outcome dynamics_fidelity() {
  const OrbitConfig cfg;
  const SpacecraftParams p;
  const int steps = static_cast<int>(std::llround(2 * std::numbers::pi / cfg.n0() / cfg.dt));
  RelativeState s;
  s.r.z() = 1.0;
  double worst = 0;
  for (int k = 1; k <= steps; ++k) {
    s = rk4_step(s, {}, cfg, p);
    worst = std::max(worst, std::abs(s.r.z() - std::cos(cfg.n0() * k * cfg.dt)));  // amplitude 1
  }
  RelativeState spin;
  spin.q = Quaternion::from_axis_angle(Vec3(1, -2, 0.5), 0.9);
  spin.omega = Vec3(0.4, -0.3, 0.2);
  ControlInput u;
  u.tau = Vec3(3, -2, 1);
  double drift = 0;
  for (int k = 0; k < 2500; ++k) {
    spin = rk4_step(spin, u, cfg, p);
    drift = std::max(drift, std::abs(spin.q.norm() - 1.0));
  }
  const bool ok = worst < 1e-6 && drift < 1e-9;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "z rel err " + fmt(worst) + " (< 1e-6) over " + std::to_string(steps) + " steps; |q| drift " +
              fmt(drift) + " (< 1e-9)"};
}

// 2. Noiseless MPC from the standard seeds; returns the report rows too.
Outcome expert_quality(const RunConfig& cfg, std::vector<ReportRow>& rows_out) {
  const mpc::Problem& pb = cfg.problem;
  double worst_r = 0, worst_v = 0, worst_a = 0, worst_w = 0, slowest = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : kStandardSeeds) {
    MpcPolicy policy(pb);
    Rng rng(0);
    const auto t0 = Clock::now();
    const EpisodeRecord rec =
        run_episode(policy, sample_initial_state(seed, pb.orbit), 2500, NoiseConfig::off(), rng, pb, seed);
    slowest = std::max(slowest, seconds_since(t0));
    const RelativeState& f = rec.states.back();
    worst_r = std::max(worst_r, (f.r - pb.target.r_hat).norm());
    worst_v = std::max(worst_v, f.v.norm());
    worst_a = std::max(worst_a, quat_error_angle(f.q, pb.target.q_hat));
    worst_w = std::max(worst_w, f.omega.norm());
    if (rec.diverged || rec.steps() != 2500) worst_r = INFINITY;
    progress("mpc seed " + std::to_string(seed) + ": |r - r_hat| " + fmt((f.r - pb.target.r_hat).norm()));
  }
  SuiteConfig suite;
  suite.conditions = {{"nominal", NoiseConfig::off(), 0}};
  rows_out = evaluate_suite({{"mpc", [pb] { return std::make_unique<MpcPolicy>(pb); }, ""}}, suite, pb);
  const bool ok = worst_r < 0.1 && worst_v < 0.01 && worst_a < 0.01 && worst_w < 0.01 && slowest < 600;
  detail << "worst terminal |r-r_hat| " << fmt(worst_r) << " m, |v| " << fmt(worst_v) << " m/s, alpha "
         << fmt(worst_a) << " rad, |w| " << fmt(worst_w) << " rad/s; slowest episode " << fmt(slowest)
         << " s; ATTP " << fmt(rows_out[0].ttp.mean) << " ATRP " << fmt(rows_out[0].trp.mean);
  return {ok ? Outcome::kPass : Outcome::kFail, detail.str()};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 3. Default gen-demos: 50 x 2500, reproducible, |w_final| > 0.999.
Outcome dataset_contract(const RunConfig& cfg, const fs::path& work) {
  GenerationConfig gen = cfg.generation;
  const auto t0 = Clock::now();
  const Dataset ds = generate_demonstrations(gen, cfg.problem, progress);
  persist_dataset(ds, work / "dataset_default");
  progress("default dataset generated in " + fmt(seconds_since(t0)) + " s");
  bool shape = static_cast<int>(ds.trajectories.size()) == 50;
  double min_w = 1.0;
  for (const Demonstration& d : ds.trajectories) {
    shape = shape && d.length() == 2500 && d.true_states.size() == 2501;
    min_w = std::min(min_w, std::abs(d.true_states.back().q.w));
  }
  // Regenerate the first and last trajectories alone and compare file bytes.
  gen.n_traj = 2;
  persist_dataset(generate_demonstrations(gen, cfg.problem), work / "dataset_repro");
  const Dataset reloaded = load_dataset(work / "dataset_default");
  bool repro = file_bytes(work / "dataset_default/traj_000.csv") == file_bytes(work / "dataset_repro/traj_000.csv") &&
               file_bytes(work / "dataset_default/traj_001.csv") == file_bytes(work / "dataset_repro/traj_001.csv");
  repro = repro && reloaded.trajectories.size() == ds.trajectories.size();
  const bool ok = shape && repro && min_w > 0.999;
  return {ok ? Outcome::kPass : Outcome::kFail,
          std::to_string(ds.trajectories.size()) + " trajectories x " +
              std::to_string(ds.trajectories.front().length()) + " steps; byte-reproducible " +
              (repro ? "yes" : "NO") + "; min |w_final| " + fmt(min_w) + " (> 0.999)"};
}

RelativeState random_state(Rng& rng) {
  RelativeState s;
  s.r = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
  s.v = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  s.q = rng.uniform_quaternion();
  s.omega = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  return s;
}

double alpha_acos(const Quaternion& a, const Quaternion& b) {
  return 2.0 * std::acos(std::min(1.0, std::abs(a.dot(b))));
}

double err_oracle(const RelativeState& s, const RelativeState& ref) {
  const double a = alpha_acos(s.q, ref.q);
  return (s.r - ref.r).norm() + (s.v - ref.v).norm() + a * a + (s.omega - ref.omega).norm();
}

// 4. Metric operations against brute-force re-implementations.
Outcome metric_oracles(const mpc::Problem& pb) {
  Rng rng(2024);
  double esr_err = 0, prec_err = 0, agg_err = 0, ctrl_err = 0;
  long cs_mismatch = 0;
  const RelativeState target = pb.target.as_state();
  for (int ep = 0; ep < 100; ++ep) {
    const long n = 20 + static_cast<long>(rng.below(300));
    EpisodeRecord rec;
    rec.mode = ExecutionMode::kCommandedState;
    for (long t = 0; t <= n; ++t) rec.states.push_back(random_state(rng));
    double sum = 0;
    for (long t = 1; t <= n; ++t) sum += err_oracle(rec.states[t], target);
    esr_err = std::max(esr_err, std::abs(episodic_stepwise_reward(rec, pb.target) + sum / n));
    const RelativeState& f = rec.states[n];
    const double a = alpha_acos(f.q, pb.target.q_hat);
    const Precision p = terminal_precision(rec, pb.target);
    prec_err = std::max({prec_err, std::abs(p.ttp - (f.r - pb.target.r_hat).norm() - f.v.norm()),
                         std::abs(p.trp - a * a - f.omega.norm())});
    long best = -1;
    double best_mean = 0;
    for (long s = 1; s + 19 <= n; ++s) {
      double w = 0;
      for (long k = s; k < s + 20; ++k) w += err_oracle(rec.states[k], f);
      if (best < 0 || w / 20 < best_mean) best = s, best_mean = w / 20;
    }
    cs_mismatch += convergence_step(rec) != best;

    // Temporal aggregation over a random prediction history.
    const int h = 1 + static_cast<int>(rng.below(30));
    const double kappa = rng.uniform(0, 0.5);
    std::vector<std::vector<StateArray>> hist;
    AggregationBuffer buffer(h);
    for (long t = 1; t <= 60; ++t) {
      std::vector<StateArray> frames;
      for (int k = 0; k < h; ++k) frames.push_back(random_state(rng).to_array());
      hist.push_back(frames);
      buffer.push(t, frames);
      const StateArray got = aggregate_action(buffer, t, kappa, false);
      const long m = std::min<long>(t, h);
      double total = 0;
      for (long i = 1; i <= m; ++i) total += std::exp(-kappa * i);
      const StateArray& ref = hist[t - 1][0];
      for (std::size_t c = 0; c < kStateDim; ++c) {
        double want = 0;
        for (long i = 1; i <= m; ++i) {
          const long s = t - m + i;
          const StateArray& fr = hist[s - 1][t - s];
          const double dot = fr[6] * ref[6] + fr[7] * ref[7] + fr[8] * ref[8] + fr[9] * ref[9];
          const double sign = (c >= 6 && c < 10 && dot < 0) ? -1.0 : 1.0;
          want += std::exp(-kappa * i) / total * sign * fr[c];
        }
        agg_err = std::max(agg_err, std::abs(got[c] - want));
      }
    }

    // Wrench reconstruction of a forward-simulated constant-control episode.
    RelativeState s0 = random_state(rng);
    s0.omega *= 0.2;
    ControlInput u;
    u.f = Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
    u.tau = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    EpisodeRecord sim;
    sim.states.push_back(s0);
    for (int k = 0; k < 60; ++k) sim.states.push_back(rk4_step(sim.states.back(), u, pb.orbit, pb.params));
    const WrenchSeries w = reconstruct_wrench(sim, pb);
    for (std::size_t k = 0; k < w.index.size(); ++k) {
      ctrl_err = std::max({ctrl_err, (w.force[k] / pb.params.mass() - u.f).cwiseAbs().maxCoeff(),
                           (w.torque[k] - u.tau).cwiseAbs().maxCoeff()});
    }
  }
  const bool ok = esr_err < 1e-12 && prec_err < 1e-12 && agg_err < 1e-12 && cs_mismatch == 0 && ctrl_err < 1e-3;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "100 episodes: ESR " + fmt(esr_err) + ", precision " + fmt(prec_err) + ", aggregation " +
              fmt(agg_err) + " (< 1e-12); CS mismatches " + std::to_string(cs_mismatch) +
              "; controls " + fmt(ctrl_err) + " (< 1e-3)"};
}

Demonstration wave_demo(int steps) {
  Demonstration d;
  for (int k = 0; k <= steps; ++k) {
    const double s = 0.05 * k;
    RelativeState x;
    x.r = Vec3(10 * std::cos(s), 5 * std::sin(s), 2 + std::sin(2 * s));
    x.v = Vec3(-0.5 * std::sin(s), 0.25 * std::cos(s), 0.1 * std::cos(2 * s));
    x.q = Quaternion{std::cos(0.3 * s), 0.2 * std::sin(s), 0.1, 0.3 * std::cos(s)}.normalized();
    x.omega = Vec3(0.01 * std::sin(s), 0.02 * std::cos(s), 0.005 * s);
    d.true_states.push_back(x);
    d.observed_states.push_back(x);
    if (k < steps) d.controls.push_back(ControlInput{});
  }
  return d;
}

ModelConfig tiny(int d, int n) {
  ModelConfig c;
  c.d = d;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.n = n;
  c.z_dim = 4;
  c.ff_mult = 2;
  return c;
}

// 5. Gradient checks, KL examples, single-batch overfit.
Outcome learning_core() {
  double prim = 0;
  std::string worst_name;
  for (const auto& r : ad::check_all_primitives()) {
    if (r.max_rel_error > prim) prim = r.max_rel_error, worst_name = r.name;
  }
  const Demonstration d = wave_demo(40);
  const IlSrdModel m(tiny(8, 4), fit_normalization({d}), 13);
  const TrainingItem it = sample_training_item(d, 5, 4);
  const ad::Mat eps = (ad::Mat(1, 4) << 0.3, -0.5, 0.8, 0.1).finished();
  // The floor keeps O(1e-9) gradients of an O(10) loss out of the relative error.
  const double full = ad::grad_check([&](ad::Tape& t) { return m.item_loss(t, it, eps); },
                                     m.params().tensors(), 1e-4, 1e-6);

  ad::Tape t(false);
  auto kl = [&](double mu, double lv) {
    return kl_loss(t, t.constant(ad::Mat::Constant(1, 1, mu)), t.constant(ad::Mat::Constant(1, 1, lv))).item();
  };
  const double kl_err = std::max({std::abs(kl(0, 0)), std::abs(kl(1, 0) - 0.5),
                                  std::abs(kl(0, std::log(4.0)) - 0.8069)});

  IlSrdModel fit(tiny(16, 8), fit_normalization({d}), 21);
  ad::AdamW opt({.lr = 2e-3, .weight_decay = 0.0});
  std::vector<TrainingItem> batch;
  for (std::size_t k : {0u, 10u, 20u, 35u}) batch.push_back(sample_training_item(d, k, 8));
  Rng eps_rng(1);
  const double first = train_step(fit, opt, batch, eps_rng).total;
  double last = first;
  for (int step = 1; step < 2000 && last > first / 100; ++step) last = train_step(fit, opt, batch, eps_rng).total;

  // 0.8069 is quoted to 4 decimals; the exact value is -(1 + ln 4 - 4)/2.
  const bool ok = prim < 1e-4 && full < 1e-4 && kl_err < 1e-4 && std::abs(kl(0, std::log(4.0)) +
                  0.5 * (1 + std::log(4.0) - 4.0)) < 1e-6 && last * 100 <= first;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "worst primitive " + worst_name + " " + fmt(prim) + ", full loss " + fmt(full) +
              " (< 1e-4); KL examples max err " + fmt(kl_err) + "; overfit " + fmt(first / last) + "x"};
}

struct DeskModels {
  std::shared_ptr<const IlSrdModel> il;
  std::shared_ptr<const BcModel> bc;
  RunConfig cfg;
};

DeskModels train_desk(const fs::path& work) {
  DeskModels out;
  out.cfg = resolve_config(fs::path(ILSRD_SOURCE_DIR) / "configs" / "desk.json", {});
  const RunConfig& cfg = out.cfg;
  auto t0 = Clock::now();
  const Dataset ds = generate_demonstrations(cfg.generation, cfg.problem, progress);
  persist_dataset(ds, work / "dataset_desk");
  progress("desk dataset in " + fmt(seconds_since(t0)) + " s");
  TrainOptions opts;
  opts.log = progress;
  t0 = Clock::now();
  TrainResult il = train_il_srd(ds.trajectories, cfg.model, cfg.seed, opts);
  progress("IL-SRD trained in " + fmt(seconds_since(t0)) + " s");
  il.model.save(work / "desk_ilsrd.ckpt", {{"seed", cfg.seed}, {"config", cfg.to_json()}});
  write_curve_csv(work / "desk_ilsrd.curve.csv", il.curve);
  t0 = Clock::now();
  BcTrainResult bc = bc_train(ds.trajectories, cfg.bc, cfg.seed, opts);
  progress("BC trained in " + fmt(seconds_since(t0)) + " s");
  bc.model.save(work / "desk_bc.ckpt", {{"seed", cfg.seed}, {"config", cfg.to_json()}});
  out.il = std::make_shared<const IlSrdModel>(std::move(il.model));
  out.bc = std::make_shared<const BcModel>(std::move(bc.model));
  return out;
}

std::vector<PolicyEntry> desk_entries(const DeskModels& m) {
  auto il = m.il;
  auto bc = m.bc;
  return {{"ilsrd", [il] { return std::make_unique<IlSrdPolicy>(il, true, "ilsrd"); }, ""},
          {"ilsrd-nota", [il] { return std::make_unique<IlSrdPolicy>(il, false, "ilsrd-nota"); }, ""},
          {"bc", [bc] { return std::make_unique<BcPolicy>(bc); }, ""}};
}

const ReportRow& row_of(const std::vector<ReportRow>& rows, const std::string& policy,
                        const std::string& condition) {
  for (const auto& r : rows) {
    if (r.policy == policy && r.condition == condition) return r;
  }
  throw Error("missing report row " + policy + "/" + condition);
}

// 6. Desk-scale ordering: TA beats no-TA and BC on ATTP and ESR.
Outcome ablation_ordering(const DeskModels& m, const fs::path& work) {
  SuiteConfig suite;
  suite.steps = m.cfg.eval.steps;
  suite.conditions = {{"nominal", NoiseConfig::off(), 0}};
  const auto rows = evaluate_suite(desk_entries(m), suite, m.cfg.problem);
  write_json(work / "desk_report.json", report_to_json(rows, {{"seed", m.cfg.seed}, {"config", m.cfg.to_json()}}));
  const ReportRow& ta = row_of(rows, "ilsrd", "nominal");
  const ReportRow& nota = row_of(rows, "ilsrd-nota", "nominal");
  const ReportRow& bc = row_of(rows, "bc", "nominal");
  std::ostringstream detail;
  for (const ReportRow* r : {&ta, &nota, &bc}) {
    detail << r->policy << " ATTP " << fmt(r->ttp.mean) << " ESR " << fmt(r->esr.mean) << "; ";
  }
  const bool ok = ta.ttp.mean < nota.ttp.mean && ta.ttp.mean < bc.ttp.mean && ta.esr.mean > nota.esr.mean &&
                  ta.esr.mean > bc.esr.mean;
  detail << "over " << suite.steps << " steps, report " << (work / "desk_report.json").string();
  return {ok ? Outcome::kPass : Outcome::kFail, detail.str()};
}

// 7. Full-scale reproduction, opt-in.
Outcome full_scale(const RunConfig& cfg, const std::vector<ReportRow>& mpc_rows, const fs::path& work) {
  const char* env = std::getenv("ILSRD_ACCEPT_FULL");
  if (!env || std::string(env) != "1") {
    return {Outcome::kSkipped, "set ILSRD_ACCEPT_FULL=1 to train with the full hyperparameters (many CPU hours)"};
  }
  const fs::path data = work / "dataset_default";
  const Dataset ds = fs::exists(data / "manifest.json") ? load_dataset(data)
                                                        : generate_demonstrations(cfg.generation, cfg.problem, progress);
  TrainOptions opts;
  opts.log = progress;
  auto il = std::make_shared<const IlSrdModel>(train_il_srd(ds.trajectories, cfg.model, cfg.seed, opts).model);
  il->save(work / "full_ilsrd.ckpt", {{"seed", cfg.seed}, {"config", cfg.to_json()}});
  SuiteConfig suite;
  suite.conditions = {{"nominal", NoiseConfig::off(), 0}};
  const auto rows = evaluate_suite(
      {{"ilsrd", [il] { return std::make_unique<IlSrdPolicy>(il, true, "ilsrd"); }, ""}}, suite, cfg.problem);
  const ReportRow& r = rows[0];
  const double mpc_esr = mpc_rows.empty() ? NAN : mpc_rows[0].esr.mean;
  const bool ok = r.ttp.mean < 5 && r.trp.mean < 0.01 && std::abs(r.esr.mean - mpc_esr) < 0.1;
  return {ok ? Outcome::kPass : Outcome::kFail, "ATTP " + fmt(r.ttp.mean) + " ATRP " + fmt(r.trp.mean) +
                                                    " ESR " + fmt(r.esr.mean) + " (MPC ESR " + fmt(mpc_esr) + ")"};
}

// 8. Robustness: IL-SRD ATTP degrades < 25 %, MPC ATTP > 5x under noise.
Outcome robustness(const DeskModels& m, const RunConfig& cfg, const fs::path& work) {
  SuiteConfig suite;
  suite.steps = cfg.eval.steps;
  suite.conditions = {{"nominal", NoiseConfig::off(), 0}, {"disturbed", cfg.eval.disturbed, 1}};
  const mpc::Problem pb = cfg.problem;
  auto il = m.il;
  const auto rows =
      evaluate_suite({{"ilsrd", [il] { return std::make_unique<IlSrdPolicy>(il, true, "ilsrd"); }, ""},
                      {"mpc", [pb] { return std::make_unique<MpcPolicy>(pb); }, ""}},
                     suite, pb);
  write_json(work / "robustness_report.json", report_to_json(rows, {{"seed", cfg.seed}}));
  const double il_ratio = row_of(rows, "ilsrd", "disturbed").ttp.mean / row_of(rows, "ilsrd", "nominal").ttp.mean;
  const double mpc_ratio = row_of(rows, "mpc", "disturbed").ttp.mean / row_of(rows, "mpc", "nominal").ttp.mean;
  const bool ok = il_ratio < 1.25 && mpc_ratio > 5;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "IL-SRD ATTP " + fmt(row_of(rows, "ilsrd", "nominal").ttp.mean) + " -> " +
              fmt(row_of(rows, "ilsrd", "disturbed").ttp.mean) + " (x" + fmt(il_ratio) + ", need < 1.25); MPC ATTP " +
              fmt(row_of(rows, "mpc", "nominal").ttp.mean) + " -> " + fmt(row_of(rows, "mpc", "disturbed").ttp.mean) +
              " (x" + fmt(mpc_ratio) + ", need > 5); " + std::to_string(suite.steps) + " steps"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::string work = "acceptance_work";
  app.add_option("--only", only, "criteria to run")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_option("--work", work, "scratch directory for datasets, checkpoints and reports");
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };
  static const char* kNames[] = {"", "dynamics fidelity", "expert quality", "dataset contract", "metric oracles",
                                 "learning-core soundness", "mechanism ablation ordering",
                                 "full-scale reproduction", "robustness ordering"};
  const RunConfig cfg = resolve_config({}, {});
  fs::create_directories(work);
  std::vector<ReportRow> mpc_rows;
  std::optional<DeskModels> desk;
  bool failed = false;

  for (int c = 1; c <= 8; ++c) {
    if (!wanted(c)) continue;
    progress("criterion " + std::to_string(c) + " started");
    const auto t0 = Clock::now();
    Outcome o{Outcome::kFail, ""};
    try {
      switch (c) {
        case 1: o = dynamics_fidelity(); break;
        case 2: o = expert_quality(cfg, mpc_rows); break;
        case 3: o = dataset_contract(cfg, work); break;
        case 4: o = metric_oracles(cfg.problem); break;
        case 5: o = learning_core(); break;
        case 6:
          if (!desk) desk = train_desk(work);
          o = ablation_ordering(*desk, work);
          break;
        case 7: o = full_scale(cfg, mpc_rows, work); break;
        case 8:
          if (!desk) desk = train_desk(work);
          o = robustness(*desk, cfg, work);
          break;
      }
    } catch (const std::exception& e) {
      o = {Outcome::kFail, std::string("error: ") + e.what()};
    }
    const char* tag = o.kind == Outcome::kPass ? "PASS" : o.kind == Outcome::kFail ? "FAIL" : "SKIPPED";
    failed = failed || o.kind == Outcome::kFail;
    std::cout << "criterion " << c << " " << kNames[c] << ": " << tag << " | " << o.detail << " ["
              << fmt(seconds_since(t0)) << " s]" << std::endl;
  }
  return failed ? 1 : 0;
}
