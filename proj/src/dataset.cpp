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

#include "ilsrd/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "ilsrd/json_io.hpp"

namespace ilsrd {

namespace fs = std::filesystem;

void Demonstration::validate() const {
  if (true_states.size() != controls.size() + 1 || observed_states.size() != true_states.size()) {
    throw Error("demonstration: inconsistent sequence lengths");
  }
}

Demonstration run_expert(const RelativeState& initial, int steps, const mpc::Problem& problem,
                         const NoiseConfig& noise, Rng& noise_rng) {
  mpc::MpcController controller(problem);
  Demonstration demo;
  demo.true_states.reserve(steps + 1);
  demo.observed_states.reserve(steps + 1);
  demo.controls.reserve(steps);
  RelativeState s = initial;
  for (int t = 0; t < steps; ++t) {
    const RelativeState obs = inject_noise(s, noise, noise_rng);
    const ControlInput u = controller.step(obs);
    demo.true_states.push_back(s);
    demo.observed_states.push_back(obs);
    demo.controls.push_back(u);
    s = rk4_step(s, u, problem.orbit, problem.params);
  }
  demo.true_states.push_back(s);
  demo.observed_states.push_back(inject_noise(s, noise, noise_rng));
  demo.solver_flags = controller.flagged_steps();
  return demo;
}

namespace {

Demonstration generate_one(const GenerationConfig& gen, const mpc::Problem& problem, int index,
                           const LogFn& log) {
  const std::uint64_t base = derive_seed(gen.seed, static_cast<std::uint64_t>(index));
  for (int attempt = 0; attempt < gen.max_attempts; ++attempt) {
    const std::uint64_t seed = attempt == 0 ? base : derive_seed(base, attempt);
    Rng noise_rng(derive_seed(seed, 1));
    const RelativeState s0 = sample_initial_state(seed, problem.orbit);
    Demonstration demo = run_expert(s0, gen.steps, problem, gen.noise, noise_rng);
    demo.seed = seed;
    const double rate = gen.steps > 0 ? static_cast<double>(demo.solver_flags) / gen.steps : 0.0;
    if (rate <= gen.max_flag_rate) return demo;
    if (log) {
      std::ostringstream msg;
      msg << "trajectory " << index << " attempt " << attempt << ": solver failure rate " << rate
          << " exceeds " << gen.max_flag_rate << ", resampling";
      log(msg.str());
    }
  }
  throw Error("trajectory " + std::to_string(index) + ": no acceptable expert run after " +
              std::to_string(gen.max_attempts) + " attempts");
}

std::string traj_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "traj_%04zu.csv", i);
  return buf;
}

constexpr const char* kChannels[kStateDim] = {"rx", "ry", "rz", "vx", "vy", "vz", "qw",
                                              "qx", "qy", "qz", "wx", "wy", "wz"};
constexpr const char* kControls[kControlDim] = {"fx", "fy", "fz", "tx", "ty", "tz"};

std::string csv_header() {
  std::string h = "t";
  for (const char* c : kChannels) h += std::string(",true_") + c;
  for (const char* c : kChannels) h += std::string(",obs_") + c;
  for (const char* c : kControls) h += std::string(",u_") + c;
  return h;
}

std::string to_csv(const Demonstration& d) {
  std::string out = csv_header();
  out += '\n';
  const std::size_t L = d.length();
  for (std::size_t t = 0; t <= L; ++t) {
    out += std::to_string(t);
    for (double v : d.true_states[t].to_array()) (out += ',') += format_double(v);
    for (double v : d.observed_states[t].to_array()) (out += ',') += format_double(v);
    if (t < L) {
      for (double v : d.controls[t].to_array()) (out += ',') += format_double(v);
    } else {
      out += ",,,,,,";
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("missing file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + p.string());
}

Demonstration from_csv(const std::string& text, const std::string& name) {
  Demonstration d;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != csv_header()) {
    throw IoError(name + ":1: unexpected header");
  }
  std::vector<std::string> fields;
  bool saw_final = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (saw_final) throw IoError(name + ":" + std::to_string(lineno) + ": row after final state");
    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const std::string where = name + ":" + std::to_string(lineno);
    if (fields.size() != 1 + 2 * kStateDim + kControlDim) {
      throw IoError(where + ": malformed row (expected 33 fields, got " +
                    std::to_string(fields.size()) + ")");
    }
    auto parse = [&](const std::string& f) {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw IoError(where + ": malformed number '" + f + "'");
      }
      return v;
    };
    if (parse(fields[0]) != static_cast<double>(d.true_states.size())) {
      throw IoError(where + ": time index out of sequence");
    }
    StateArray ts{}, os{};
    for (std::size_t k = 0; k < kStateDim; ++k) {
      ts[k] = parse(fields[1 + k]);
      os[k] = parse(fields[1 + kStateDim + k]);
    }
    d.true_states.push_back(RelativeState::from_array(ts));
    d.observed_states.push_back(RelativeState::from_array(os));
    const std::size_t c0 = 1 + 2 * kStateDim;
    const bool no_control =
        std::all_of(fields.begin() + c0, fields.end(), [](const std::string& f) { return f.empty(); });
    if (no_control) {
      saw_final = true;
    } else {
      ControlArray u{};
      for (std::size_t k = 0; k < kControlDim; ++k) u[k] = parse(fields[c0 + k]);
      d.controls.push_back(ControlInput::from_array(u));
    }
  }
  if (!saw_final) throw IoError(name + ": missing final state row");
  d.validate();
  return d;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) {
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return ss.str();
}

Dataset generate_demonstrations(const GenerationConfig& gen, const mpc::Problem& problem,
                                const LogFn& log) {
  if (gen.n_traj < 1) throw ConfigError("gen-demos: n_traj must be at least 1");
  if (gen.steps < 1) throw ConfigError("gen-demos: steps must be at least 1");
  gen.noise.validate();
  Dataset ds;
  ds.generation = gen;
  ds.problem = problem;
  ds.trajectories.resize(gen.n_traj);

  const int jobs = std::max(1, std::min(gen.jobs, gen.n_traj));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < gen.n_traj; i = next++) {
      try {
        ds.trajectories[i] = generate_one(gen, problem, i, log);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return ds;
}

void persist_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  Json files = Json::array();
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const Demonstration& d = ds.trajectories[i];
    d.validate();
    const std::string bytes = to_csv(d);
    const std::string name = traj_name(i);
    write_file(dir / name, bytes);
    files.push_back({{"name", name},
                     {"sha256", sha256_hex(bytes)},
                     {"seed", d.seed},
                     {"steps", d.length()},
                     {"solver_flags", d.solver_flags}});
  }
  const auto& g = ds.generation;
  Json manifest = {{"format_version", 1},
                   {"trajectory_count", ds.trajectories.size()},
                   {"step_count", ds.trajectories.empty() ? 0 : ds.trajectories.front().length()},
                   {"dt", ds.problem.orbit.dt},
                   {"n0", ds.problem.orbit.n0()},
                   {"limits",
                    {{"thrust", ds.problem.params.thrust_limit()},
                     {"torque", ds.problem.params.torque_limit()}}},
                   {"noise", to_json(g.noise)},
                   {"global_seed", g.seed},
                   {"max_flag_rate", g.max_flag_rate},
                   {"max_attempts", g.max_attempts},
                   {"problem", to_json(ds.problem)},
                   {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  Json manifest;
  try {
    manifest = Json::parse(read_file(mpath));
  } catch (const Json::exception& e) {
    throw IoError(mpath.string() + ": malformed manifest: " + e.what());
  }
  Dataset ds;
  try {
    ds.problem = problem_from_json(manifest.at("problem"));
    ds.generation.noise = noise_from_json(manifest.at("noise"));
    ds.generation.seed = manifest.at("global_seed").get<std::uint64_t>();
    ds.generation.n_traj = manifest.at("trajectory_count").get<int>();
    ds.generation.steps = manifest.at("step_count").get<int>();
    ds.generation.max_flag_rate = manifest.at("max_flag_rate").get<double>();
    ds.generation.max_attempts = manifest.at("max_attempts").get<int>();
  } catch (const Json::exception& e) {
    throw IoError(mpath.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }
  const Json& files = manifest.at("files");
  if (static_cast<int>(files.size()) != ds.generation.n_traj) {
    throw IoError(mpath.string() + ": trajectory_count does not match file list");
  }
  for (const Json& f : files) {
    const std::string name = f.at("name").get<std::string>();
    const std::string bytes = read_file(dir / name);
    if (sha256_hex(bytes) != f.at("sha256").get<std::string>()) {
      throw IoError((dir / name).string() + ": checksum mismatch");
    }
    Demonstration d = from_csv(bytes, (dir / name).string());
    d.seed = f.at("seed").get<std::uint64_t>();
    d.solver_flags = f.at("solver_flags").get<long>();
    ds.trajectories.push_back(std::move(d));
  }
  return ds;
}

}  // namespace ilsrd
