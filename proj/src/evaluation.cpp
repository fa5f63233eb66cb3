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

#include "ilsrd/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace ilsrd {

std::string to_string(ExecutionMode m) {
  return m == ExecutionMode::kWrench ? "wrench" : "commanded-state";
}

ControlInput Policy::wrench(const RelativeState&) {
  throw Error(name() + ": policy does not emit a wrench");
}

RelativeState Policy::command(const RelativeState&) {
  throw Error(name() + ": policy does not emit a commanded state");
}

RelativeState BcPolicy::command(const RelativeState& observed) {
  const StateArray a = model_->predict(observed);
  return RelativeState::from_array(a);
}

IlSrdPolicy::IlSrdPolicy(std::shared_ptr<const IlSrdModel> model, bool temporal_aggregation,
                         std::string name)
    : model_(std::move(model)),
      aggregate_(temporal_aggregation),
      name_(std::move(name)),
      buffer_(model_->config().n) {}

void IlSrdPolicy::reset() {
  buffer_.clear();
  step_ = 0;
}

RelativeState IlSrdPolicy::command(const RelativeState& observed) {
  ++step_;
  std::vector<StateArray> frames = model_->predict(observed);
  if (!aggregate_) return RelativeState::from_array(frames.front());
  buffer_.push(step_, std::move(frames));
  return RelativeState::from_array(aggregate_action(buffer_, step_, model_->config().kappa));
}

EpisodeRecord run_episode(Policy& policy, const RelativeState& initial, int steps,
                          const NoiseConfig& noise, Rng& noise_rng, const mpc::Problem& pb,
                          std::uint64_t seed) {
  if (steps < 1) throw ConfigError("episode needs at least one step");
  policy.reset();
  EpisodeRecord rec;
  rec.policy = policy.name();
  rec.seed = seed;
  rec.mode = policy.mode();
  rec.states.reserve(steps + 1);
  rec.states.push_back(initial);
  for (int t = 0; t < steps; ++t) {
    const RelativeState& s = rec.states.back();
    const RelativeState obs = inject_noise(s, noise, noise_rng);
    RelativeState next;
    try {
      if (rec.mode == ExecutionMode::kWrench) {
        const ControlInput u = policy.wrench(obs);
        next = rk4_step(s, u, pb.orbit, pb.params);
        rec.controls.push_back(u);
      } else {
        next = policy.command(obs);
        next.q = next.q.normalized();
      }
    } catch (const Error& e) {
      rec.diverged = true;
      rec.diverged_reason = e.what();
      if (rec.controls.size() > rec.observed.size()) rec.controls.pop_back();
      break;
    }
    if (!next.is_finite()) {
      rec.diverged = true;
      rec.diverged_reason = "non-finite state at step " + std::to_string(t + 1);
      if (rec.controls.size() > rec.observed.size()) rec.controls.pop_back();
      break;
    }
    rec.observed.push_back(obs);
    rec.states.push_back(next);
  }
  return rec;
}

WrenchSeries reconstruct_wrench(const EpisodeRecord& rec, const mpc::Problem& pb) {
  const long n = rec.steps();
  if (n < 2) throw Error("reconstruct_wrench: record needs at least 3 states");
  const double dt = pb.orbit.dt;
  const Mat3& J = pb.params.inertia();
  WrenchSeries w;
  for (long t = 1; t < n; ++t) {
    const RelativeState& s = rec.states[t];
    const Vec3 vdot = (rec.states[t + 1].v - rec.states[t - 1].v) / (2 * dt);
    const Vec3 wdot = (rec.states[t + 1].omega - rec.states[t - 1].omega) / (2 * dt);
    w.index.push_back(t);
    w.force.push_back(pb.params.mass() * (vdot - gravity_accel(s, pb.orbit)));
    w.torque.push_back(J * wdot + s.omega.cross(J * s.omega));
  }
  return w;
}

WrenchSeries commanded_wrench(const EpisodeRecord& rec, const mpc::Problem& pb) {
  if (rec.mode != ExecutionMode::kWrench) throw Error("commanded_wrench: not a wrench-mode record");
  WrenchSeries w;
  for (std::size_t t = 0; t < rec.controls.size(); ++t) {
    w.index.push_back(static_cast<long>(t));
    w.force.push_back(pb.params.mass() * rec.controls[t].f);
    w.torque.push_back(rec.controls[t].tau);
  }
  return w;
}

Energy episode_energy(const EpisodeRecord& rec, const WrenchSeries& w) {
  Energy e;
  for (std::size_t k = 0; k < w.index.size(); ++k) {
    const long t = w.index[k];
    if (t < 0 || t >= rec.steps()) throw Error("episode_energy: wrench index out of range");
    const RelativeState& a = rec.states[t];
    const RelativeState& b = rec.states[t + 1];
    const Vec3 dr = b.r - a.r;
    const Vec3 dtheta = (a.q.conjugate() * b.q).to_rotation_vector();
    e.w_force += w.force[k].cwiseProduct(dr).cwiseAbs().sum();
    e.w_torque += w.torque[k].cwiseProduct(dtheta).cwiseAbs().sum();
  }
  e.sec = rec.steps() > 0 ? (e.w_force + e.w_torque) / static_cast<double>(rec.steps()) : 0.0;
  return e;
}

double step_error(const RelativeState& s, const RelativeState& ref) {
  const double a = quat_error_angle(s.q, ref.q);
  return (s.r - ref.r).norm() + (s.v - ref.v).norm() + a * a + (s.omega - ref.omega).norm();
}

long convergence_step(const EpisodeRecord& rec) {
  constexpr long kWindow = 20;
  const long n = rec.steps();
  if (n < kWindow) throw Error("convergence_step: episode shorter than 20 steps");
  const RelativeState& final_state = rec.states[n];
  std::vector<double> err(n + 1);
  for (long t = 1; t <= n; ++t) err[t] = step_error(rec.states[t], final_state);
  long best = 1;
  double best_mean = INFINITY;
  for (long start = 1; start + kWindow - 1 <= n; ++start) {
    double sum = 0;
    for (long k = start; k < start + kWindow; ++k) sum += err[k];
    const double mean = sum / kWindow;
    if (mean < best_mean) {
      best_mean = mean;
      best = start;
    }
  }
  return best;
}

Precision terminal_precision(const EpisodeRecord& rec, const mpc::TargetState& target) {
  const RelativeState& f = rec.states.back();
  const double a = quat_error_angle(f.q, target.q_hat);
  return {(f.r - target.r_hat).norm() + f.v.norm(), a * a + f.omega.norm()};
}

double episodic_stepwise_reward(const EpisodeRecord& rec, const mpc::TargetState& target) {
  const long n = rec.steps();
  if (n < 1) throw Error("episodic_stepwise_reward: empty episode");
  const RelativeState ref = target.as_state();
  double sum = 0;
  for (long t = 1; t <= n; ++t) sum += step_error(rec.states[t], ref);
  return -sum / static_cast<double>(n);
}

EpisodeMetrics compute_metrics(const EpisodeRecord& rec, const mpc::Problem& pb) {
  EpisodeMetrics m;
  m.seed = rec.seed;
  m.steps = rec.steps();
  m.diverged = rec.diverged;
  if (m.steps < 20) throw Error(rec.policy + ": episode ended after " + std::to_string(m.steps) +
                                " steps (" + rec.diverged_reason + ")");
  const WrenchSeries w =
      rec.mode == ExecutionMode::kWrench ? commanded_wrench(rec, pb) : reconstruct_wrench(rec, pb);
  m.sec = episode_energy(rec, w).sec;
  m.cs = convergence_step(rec);
  const Precision p = terminal_precision(rec, pb.target);
  m.ttp = p.ttp;
  m.trp = p.trp;
  m.esr = episodic_stepwise_reward(rec, pb.target);
  return m;
}

namespace {

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return s;
}

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

void ReportRow::summarize() {
  std::vector<double> a, b, c, d, e;
  for (const auto& m : episodes) {
    a.push_back(static_cast<double>(m.cs));
    b.push_back(m.sec);
    c.push_back(m.ttp);
    d.push_back(m.trp);
    e.push_back(m.esr);
  }
  cs = stat_of(a);
  sec = stat_of(b);
  ttp = stat_of(c);
  trp = stat_of(d);
  esr = stat_of(e);
}

std::vector<ReportRow> evaluate_suite(const std::vector<PolicyEntry>& policies,
                                      const SuiteConfig& cfg, const mpc::Problem& pb,
                                      const EpisodeSink& sink) {
  if (cfg.seeds.empty()) throw ConfigError("evaluation: no seeds");
  for (const auto& c : cfg.conditions) c.noise.validate();

  struct Task {
    std::size_t row;
    std::size_t policy;
    std::size_t condition;
    std::size_t seed;
  };
  std::vector<ReportRow> rows;
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (std::size_t c = 0; c < cfg.conditions.size(); ++c) {
      ReportRow row;
      row.policy = policies[p].name;
      row.condition = cfg.conditions[c].name;
      row.skipped = policies[p].make ? "" : policies[p].skipped;
      if (row.skipped.empty() && !policies[p].make) row.skipped = "no factory";
      row.episodes.resize(row.skipped.empty() ? cfg.seeds.size() : 0);
      rows.push_back(row);
      if (!rows.back().skipped.empty()) continue;
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({rows.size() - 1, p, c, s});
    }
  }

  std::vector<EpisodeRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const Task& tk = tasks[i];
        const std::uint64_t seed = cfg.seeds[tk.seed];
        std::unique_ptr<Policy> policy = policies[tk.policy].make();
        Rng noise_rng(derive_seed(seed, 1000 + cfg.conditions[tk.condition].stream));
        records[i] = run_episode(*policy, sample_initial_state(seed, pb.orbit), cfg.steps,
                                 cfg.conditions[tk.condition].noise, noise_rng, pb, seed);
        records[i].policy = policies[tk.policy].name;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    rows[tasks[i].row].episodes[tasks[i].seed] = compute_metrics(records[i], pb);
    if (sink) sink(cfg.conditions[tasks[i].condition].name, records[i]);
  }
  for (auto& r : rows) r.summarize();
  return rows;
}

nlohmann::json report_to_json(const std::vector<ReportRow>& rows, const nlohmann::json& meta) {
  nlohmann::json out;
  out["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  out["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"policy", r.policy}, {"condition", r.condition}};
    if (!r.skipped.empty()) {
      row["skipped"] = r.skipped;
      out["rows"].push_back(row);
      continue;
    }
    row["episodes"] = nlohmann::json::array();
    for (const auto& m : r.episodes) {
      row["episodes"].push_back({{"seed", m.seed},
                                 {"steps", m.steps},
                                 {"diverged", m.diverged},
                                 {"cs", m.cs},
                                 {"sec", m.sec},
                                 {"ttp", m.ttp},
                                 {"trp", m.trp},
                                 {"esr", m.esr}});
    }
    row["cs"] = stat_json(r.cs);
    row["sec"] = stat_json(r.sec);
    row["attp"] = stat_json(r.ttp);
    row["atrp"] = stat_json(r.trp);
    row["esr"] = stat_json(r.esr);
    out["rows"].push_back(row);
  }
  return out;
}

void write_episode_csv(const std::filesystem::path& path, const EpisodeRecord& rec,
                       const mpc::Problem& pb) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  static const char* kChannels[] = {"rx", "ry", "rz", "vx", "vy", "vz", "qw",
                                    "qx", "qy", "qz", "wx", "wy", "wz"};
  out << "t";
  for (const char* c : kChannels) out << ",true_" << c;
  for (const char* c : kChannels) out << ",obs_" << c;
  out << ",fx,fy,fz,tx,ty,tz,error\n";

  WrenchSeries w;
  if (rec.mode == ExecutionMode::kWrench) {
    w = commanded_wrench(rec, pb);
  } else if (rec.steps() >= 2) {
    w = reconstruct_wrench(rec, pb);
  }
  std::map<long, std::size_t> at;
  for (std::size_t k = 0; k < w.index.size(); ++k) at[w.index[k]] = k;
  const RelativeState ref = pb.target.as_state();
  for (long t = 0; t <= rec.steps(); ++t) {
    out << t;
    for (double v : rec.states[t].to_array()) out << ',' << format_double(v);
    if (t < static_cast<long>(rec.observed.size())) {
      for (double v : rec.observed[t].to_array()) out << ',' << format_double(v);
    } else {
      out << std::string(kStateDim, ',');
    }
    if (auto it = at.find(t); it != at.end()) {
      const Vec3& f = w.force[it->second];
      const Vec3& tau = w.torque[it->second];
      for (int i = 0; i < 3; ++i) out << ',' << format_double(f[i]);
      for (int i = 0; i < 3; ++i) out << ',' << format_double(tau[i]);
    } else {
      out << ",,,,,,";
    }
    out << ',' << format_double(step_error(rec.states[t], ref)) << '\n';
  }
}

std::vector<AblationVariant> default_ablations() {
  std::vector<AblationVariant> v;
  v.push_back({"IL-SRD", [](ModelConfig&) {}, true});
  for (int n : {100, 200, 400, 600}) {
    v.push_back({"n=" + std::to_string(n), [n](ModelConfig& c) { c.n = n; }, true});
  }
  v.push_back({"zero decoder target",
               [](ModelConfig& c) { c.decoder_target = DecoderTarget::kZero; }, true});
  v.push_back({"learnable decoder target",
               [](ModelConfig& c) { c.decoder_target = DecoderTarget::kLearnable; }, true});
  v.push_back({"w/o temporal aggregation", [](ModelConfig&) {}, false});
  return v;
}

std::vector<ReportRow> run_ablation(const std::vector<Demonstration>& demos, const ModelConfig& base,
                                    std::uint64_t seed, const std::vector<AblationVariant>& variants,
                                    const SuiteConfig& suite, const mpc::Problem& pb,
                                    const TrainOptions& opts) {
  std::map<std::string, std::shared_ptr<const IlSrdModel>> trained;
  std::vector<PolicyEntry> entries;
  for (const auto& v : variants) {
    ModelConfig cfg = base;
    if (v.adjust) v.adjust(cfg);
    cfg.validate();
    const std::string key = cfg.to_json().dump();
    if (!trained.count(key)) {
      if (opts.log) opts.log("training ablation variant '" + v.name + "'");
      trained[key] = std::make_shared<const IlSrdModel>(train_il_srd(demos, cfg, seed, opts).model);
    }
    auto model = trained[key];
    const bool ta = v.temporal_aggregation;
    const std::string name = v.name;
    entries.push_back({name, [model, ta, name] { return std::make_unique<IlSrdPolicy>(model, ta, name); }, ""});
  }
  SuiteConfig nominal = suite;
  nominal.conditions = {suite.conditions.empty() ? Condition{"nominal", NoiseConfig::off()}
                                                 : suite.conditions.front()};
  return evaluate_suite(entries, nominal, pb);
}

}  // namespace ilsrd
