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

// ilsrd: dataset generation, training, evaluation, ablations and plot export.
// Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ilsrd/evaluation.hpp"
#include "ilsrd/grad_suite.hpp"
#include "ilsrd/plot_export.hpp"
#include "ilsrd/run_config.hpp"

namespace fs = std::filesystem;
using namespace ilsrd;

namespace {

void log(const std::string& msg) { std::cerr << "[ilsrd] " << msg << std::endl; }

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Options shared by every subcommand that reads a run configuration.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> flag_sets;  ///< overrides from dedicated flags, applied last

  void attach(CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override a config key, e.g. --set model.d=64")->take_all();
  }

  // Registers a flag that maps onto a config key.
  template <typename T>
  void bind(CLI::App* sub, const std::string& flag, const std::string& key, T& storage,
            const std::string& help) {
    sub->add_option(flag, storage, help)->each([this, key](const std::string& v) {
      const bool quoted = std::is_same_v<T, std::string>;
      flag_sets.push_back(key + "=" + (quoted ? Json(v).dump() : v));
    });
  }

  RunConfig resolve() const {
    std::vector<std::string> all = sets;
    all.insert(all.end(), flag_sets.begin(), flag_sets.end());
    RunConfig cfg = resolve_config(config, all);
    log("resolved config: " + cfg.to_json().dump());
    log("root seed: " + std::to_string(cfg.seed));
    return cfg;
  }
};

TrainOptions train_logging() {
  TrainOptions o;
  o.log = log;
  return o;
}

int cmd_gen_demos(const Common& c, const std::string& out) {
  const RunConfig cfg = c.resolve();
  const fs::path dir = out.empty() ? fs::path(cfg.paths.data) : fs::path(out);
  const Dataset ds = generate_demonstrations(cfg.generation, cfg.problem, log);
  persist_dataset(ds, dir);
  log("wrote " + std::to_string(ds.trajectories.size()) + " trajectories to " + dir.string());
  return 0;
}

Json run_meta(const RunConfig& cfg, const std::string& command) {
  return {{"command", command}, {"seed", cfg.seed}, {"config", cfg.to_json()}};
}

int cmd_train(const Common& c, const std::string& curve) {
  const RunConfig cfg = c.resolve();
  const Dataset ds = load_dataset(cfg.paths.data);
  log("training IL-SRD on " + std::to_string(ds.trajectories.size()) + " trajectories, seed " +
      std::to_string(cfg.seed));
  const TrainResult r = train_il_srd(ds.trajectories, cfg.model, cfg.seed, train_logging());
  const fs::path path = cfg.paths.model;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  r.model.save(path, run_meta(cfg, "train"));
  write_curve_csv(curve.empty() ? fs::path(path.string() + ".curve.csv") : fs::path(curve), r.curve);
  log("saved " + path.string());
  return 0;
}

int cmd_train_bc(const Common& c, const std::string& curve) {
  const RunConfig cfg = c.resolve();
  const Dataset ds = load_dataset(cfg.paths.data);
  log("training BC on " + std::to_string(ds.trajectories.size()) + " trajectories, seed " +
      std::to_string(cfg.seed));
  const BcTrainResult r = bc_train(ds.trajectories, cfg.bc, cfg.seed, train_logging());
  const fs::path path = cfg.paths.bc_model;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  r.model.save(path, run_meta(cfg, "train-bc"));
  write_curve_csv(curve.empty() ? fs::path(path.string() + ".curve.csv") : fs::path(curve), r.curve);
  log("saved " + path.string());
  return 0;
}

std::vector<Condition> conditions_for(const std::string& noise, const RunConfig& cfg) {
  const Condition nominal{"nominal", NoiseConfig::off(), 0};
  const Condition disturbed{"disturbed", cfg.eval.disturbed, 1};
  if (noise == "off") return {nominal};
  if (noise == "on") return {disturbed};
  return {nominal, disturbed};
}

SuiteConfig suite_for(const RunConfig& cfg, const std::string& noise) {
  SuiteConfig s;
  s.seeds = cfg.eval.seeds;
  s.steps = cfg.eval.steps;
  s.conditions = conditions_for(noise, cfg);
  s.jobs = cfg.jobs;
  return s;
}

int cmd_eval(const Common& c, const std::string& policies, const std::string& noise,
             const std::string& out, const std::string& episodes, bool skip_missing) {
  const RunConfig cfg = c.resolve();
  const mpc::Problem& pb = cfg.problem;
  std::vector<PolicyEntry> entries;
  std::shared_ptr<const IlSrdModel> il;
  std::shared_ptr<const BcModel> bc;
  auto missing = [&](const std::string& name, const std::string& path) {
    const std::string msg = "missing checkpoint " + path;
    if (!skip_missing) throw IoError(name + ": " + msg);
    log("skipping " + name + ": " + msg);
    entries.push_back({name, nullptr, msg});
  };
  for (const std::string& name : split_list(policies)) {
    if (name == "mpc") {
      entries.push_back({name, [pb] { return std::make_unique<MpcPolicy>(pb); }, ""});
    } else if (name == "pid") {
      const PidConfig pid = cfg.pid;
      entries.push_back({name, [pid, pb] { return std::make_unique<PidPolicy>(pid, pb.target); }, ""});
    } else if (name == "bc") {
      if (!fs::exists(cfg.paths.bc_model)) {
        missing(name, cfg.paths.bc_model);
        continue;
      }
      if (!bc) bc = std::make_shared<const BcModel>(BcModel::load(cfg.paths.bc_model));
      entries.push_back({name, [bc] { return std::make_unique<BcPolicy>(bc); }, ""});
    } else if (name == "ilsrd" || name == "ilsrd-nota") {
      if (!fs::exists(cfg.paths.model)) {
        missing(name, cfg.paths.model);
        continue;
      }
      if (!il) il = std::make_shared<const IlSrdModel>(IlSrdModel::load(cfg.paths.model));
      const bool ta = name == "ilsrd";
      entries.push_back({name, [il, ta, name] { return std::make_unique<IlSrdPolicy>(il, ta, name); }, ""});
    } else {
      throw ConfigError("unknown policy '" + name + "' (expected mpc, pid, bc, ilsrd, ilsrd-nota)");
    }
  }
  const SuiteConfig suite = suite_for(cfg, noise);
  EpisodeSink sink;
  if (!episodes.empty()) {
    sink = [&](const std::string& condition, const EpisodeRecord& rec) {
      const fs::path dir = fs::path(episodes) / condition / rec.policy;
      fs::create_directories(dir);
      write_episode_csv(dir / ("seed_" + std::to_string(rec.seed) + ".csv"), rec, pb);
    };
  }
  const std::vector<ReportRow> rows = evaluate_suite(entries, suite, pb, sink);
  for (const ReportRow& r : rows) {
    if (!r.skipped.empty()) continue;
    std::ostringstream line;
    line << r.policy << " [" << r.condition << "] CS " << r.cs.mean << " SEC " << r.sec.mean
         << " ATTP " << r.ttp.mean << " ATRP " << r.trp.mean << " ESR " << r.esr.mean;
    log(line.str());
  }
  Json meta = run_meta(cfg, "eval");
  meta["policies"] = policies;
  meta["noise"] = noise;
  write_json(out, report_to_json(rows, meta));
  log("wrote " + out);
  return 0;
}

int cmd_ablate(const Common& c, const std::string& out) {
  const RunConfig cfg = c.resolve();
  const Dataset ds = load_dataset(cfg.paths.data);
  const std::vector<ReportRow> rows = run_ablation(ds.trajectories, cfg.model, cfg.seed, default_ablations(),
                                                   suite_for(cfg, "off"), cfg.problem, train_logging());
  for (const ReportRow& r : rows) {
    log(r.policy + ": ATTP " + std::to_string(r.ttp.mean) + " ESR " + std::to_string(r.esr.mean));
  }
  write_json(out, report_to_json(rows, run_meta(cfg, "ablate")));
  log("wrote " + out);
  return 0;
}

int cmd_export_plots(const std::string& dataset, const std::string& episodes, const std::string& out) {
  if (dataset.empty() == episodes.empty()) throw ConfigError("export-plots: give exactly one of --dataset or --episodes");
  const auto files = dataset.empty() ? export_episode_series(episodes, out)
                                     : export_dataset_series(load_dataset(dataset), out);
  log("wrote " + std::to_string(files.size()) + " series files to " + out);
  return 0;
}

int cmd_grad_check(std::uint64_t seed, int points) {
  log("grad-check seed " + std::to_string(seed) + ", " + std::to_string(points) + " points");
  bool ok = true;
  for (const auto& r : ad::check_all_primitives(seed, points)) {
    const bool pass = r.max_rel_error < 1e-4;
    ok = ok && pass;
    std::cout << r.name << " " << r.max_rel_error << (pass ? "" : "  FAIL") << "\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imitation learning with anchored sequence policies for spacecraft rendezvous"};
  app.name("ilsrd");
  app.require_subcommand(1, 1);

  Common gen, train, train_bc, eval, ablate;
  std::string out, curve, policies = "mpc,pid,bc,ilsrd", noise = "both", episodes, dataset;
  bool skip_missing = false;
  int n_traj = 0, steps = 0, jobs = 0, points = 5;
  std::uint64_t seed = 0, grad_seed = 8;
  std::string data, model, bc_model;

  auto* g = app.add_subcommand("gen-demos", "generate expert demonstrations");
  gen.attach(g);
  gen.bind(g, "--n-traj", "generation.n_traj", n_traj, "number of trajectories");
  gen.bind(g, "--steps", "generation.steps", steps, "steps per trajectory");
  gen.bind(g, "--seed", "seed", seed, "root seed");
  gen.bind(g, "--jobs", "jobs", jobs, "worker threads");
  g->add_option("--out", out, "dataset directory (default paths.data)");

  auto* t = app.add_subcommand("train", "train the IL-SRD policy");
  train.attach(t);
  train.bind(t, "--data", "paths.data", data, "dataset directory");
  train.bind(t, "--out", "paths.model", model, "checkpoint path");
  train.bind(t, "--seed", "seed", seed, "root seed");
  t->add_option("--curve", curve, "training curve CSV (default <out>.curve.csv)");

  auto* tb = app.add_subcommand("train-bc", "train the behavioral cloning baseline");
  train_bc.attach(tb);
  train_bc.bind(tb, "--data", "paths.data", data, "dataset directory");
  train_bc.bind(tb, "--out", "paths.bc_model", bc_model, "checkpoint path");
  train_bc.bind(tb, "--seed", "seed", seed, "root seed");
  tb->add_option("--curve", curve, "training curve CSV (default <out>.curve.csv)");

  auto* e = app.add_subcommand("eval", "closed-loop evaluation on the standard seeds");
  eval.attach(e);
  e->add_option("--policies", policies, "comma list of mpc, pid, bc, ilsrd, ilsrd-nota");
  e->add_option("--noise", noise, "observation noise condition")->check(CLI::IsMember({"off", "on", "both"}));
  eval.bind(e, "--model", "paths.model", model, "IL-SRD checkpoint");
  eval.bind(e, "--bc-model", "paths.bc_model", bc_model, "BC checkpoint");
  eval.bind(e, "--steps", "eval.steps", steps, "episode length");
  eval.bind(e, "--jobs", "jobs", jobs, "worker threads");
  e->add_option("--out", out, "report JSON")->required();
  e->add_option("--episodes", episodes, "directory for per-episode CSVs");
  e->add_flag("--skip-missing", skip_missing, "report missing checkpoints as skipped rows");

  auto* a = app.add_subcommand("ablate", "train and evaluate the ablation variants");
  ablate.attach(a);
  ablate.bind(a, "--data", "paths.data", data, "dataset directory");
  ablate.bind(a, "--steps", "eval.steps", steps, "episode length");
  ablate.bind(a, "--seed", "seed", seed, "root seed");
  ablate.bind(a, "--jobs", "jobs", jobs, "worker threads");
  a->add_option("--out", out, "report JSON")->required();

  auto* p = app.add_subcommand("export-plots", "export per-channel plot series");
  p->add_option("--dataset", dataset, "dataset directory")->check(CLI::ExistingDirectory);
  p->add_option("--episodes", episodes, "episode CSV directory from eval --episodes")
      ->check(CLI::ExistingDirectory);
  p->add_option("--out", out, "output directory")->required();

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of every autodiff primitive");
  gc->add_option("--seed", grad_seed, "input seed");
  gc->add_option("--points", points, "random points per primitive")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (g->parsed()) return cmd_gen_demos(gen, out);
    if (t->parsed()) return cmd_train(train, curve);
    if (tb->parsed()) return cmd_train_bc(train_bc, curve);
    if (e->parsed()) return cmd_eval(eval, policies, noise, out, episodes, skip_missing);
    if (a->parsed()) return cmd_ablate(ablate, out);
    if (p->parsed()) return cmd_export_plots(dataset, episodes, out);
    if (gc->parsed()) return cmd_grad_check(grad_seed, points);
  } catch (const ConfigError& ex) {
    std::cerr << "ilsrd: configuration error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "ilsrd: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}
