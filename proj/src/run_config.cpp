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

#include "ilsrd/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ilsrd {

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json generation_json(const GenerationConfig& g) {
  return {{"n_traj", g.n_traj},
          {"steps", g.steps},
          {"noise", to_json(g.noise)},
          {"max_attempts", g.max_attempts},
          {"max_flag_rate", g.max_flag_rate}};
}

GenerationConfig generation_from_json(const Json& j) {
  reject_unknown_keys(j, {"n_traj", "steps", "noise", "max_attempts", "max_flag_rate"},
                      "generation");
  GenerationConfig g;
  read_if(j, "n_traj", g.n_traj);
  read_if(j, "steps", g.steps);
  if (j.contains("noise")) g.noise = noise_from_json(j.at("noise"));
  read_if(j, "max_attempts", g.max_attempts);
  read_if(j, "max_flag_rate", g.max_flag_rate);
  return g;
}

}  // namespace

Json to_json(const PidConfig& c) {
  return {{"kp_r", vec_json(c.kp_r)},
          {"ki_r", vec_json(c.ki_r)},
          {"kd_r", vec_json(c.kd_r)},
          {"kp_q", vec_json(c.kp_q)},
          {"ki_q", vec_json(c.ki_q)},
          {"kd_q", vec_json(c.kd_q)},
          {"k_rate", vec_json(c.k_rate)},
          {"filter_cutoff", c.filter_cutoff},
          {"filter_damping", c.filter_damping},
          {"derivative_blend", c.derivative_blend},
          {"integral_limit_r", c.integral_limit_r},
          {"integral_limit_q", c.integral_limit_q},
          {"thrust_limit", c.thrust_limit},
          {"torque_limit", c.torque_limit},
          {"dt", c.dt}};
}

PidConfig pid_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"kp_r", "ki_r", "kd_r", "kp_q", "ki_q", "kd_q", "k_rate", "filter_cutoff",
                       "filter_damping", "derivative_blend", "integral_limit_r", "integral_limit_q",
                       "thrust_limit", "torque_limit", "dt"},
                      "pid");
  PidConfig c;
  const std::pair<const char*, Vec3*> gains[] = {{"kp_r", &c.kp_r}, {"ki_r", &c.ki_r},
                                                 {"kd_r", &c.kd_r}, {"kp_q", &c.kp_q},
                                                 {"ki_q", &c.ki_q}, {"kd_q", &c.kd_q},
                                                 {"k_rate", &c.k_rate}};
  for (const auto& [key, dst] : gains) {
    if (j.contains(key)) *dst = vec_from(j.at(key), std::string("pid.") + key);
  }
  read_if(j, "filter_cutoff", c.filter_cutoff);
  read_if(j, "filter_damping", c.filter_damping);
  read_if(j, "derivative_blend", c.derivative_blend);
  read_if(j, "integral_limit_r", c.integral_limit_r);
  read_if(j, "integral_limit_q", c.integral_limit_q);
  read_if(j, "thrust_limit", c.thrust_limit);
  read_if(j, "torque_limit", c.torque_limit);
  read_if(j, "dt", c.dt);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  problem.orbit.validate();
  problem.cfg.validate();
  problem.target.validate();
  if (generation.n_traj < 1 || generation.steps < 1) {
    throw ConfigError("generation: n_traj and steps must be at least 1");
  }
  if (generation.max_attempts < 1 || !(generation.max_flag_rate >= 0 && generation.max_flag_rate <= 1)) {
    throw ConfigError("generation: invalid retry settings");
  }
  generation.noise.validate();
  model.validate();
  bc.validate();
  pid.validate();
  if (std::abs(pid.dt - problem.orbit.dt) > 1e-12) throw ConfigError("pid.dt must equal orbit.dt");
  if (pid.thrust_limit > problem.params.thrust_limit() || pid.torque_limit > problem.params.torque_limit()) {
    throw ConfigError("pid limits exceed the spacecraft actuator limits");
  }
  if (eval.steps < 20) throw ConfigError("eval.steps must be at least 20");
  if (eval.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  eval.disturbed.validate();
}

Json RunConfig::to_json() const {
  return {{"seed", seed},
          {"jobs", jobs},
          {"problem", ilsrd::to_json(problem)},
          {"generation", generation_json(generation)},
          {"model", model.to_json()},
          {"bc", bc.to_json()},
          {"pid", ilsrd::to_json(pid)},
          {"eval",
           {{"steps", eval.steps}, {"seeds", eval.seeds}, {"disturbed", ilsrd::to_json(eval.disturbed)}}},
          {"paths", {{"data", paths.data}, {"model", paths.model}, {"bc_model", paths.bc_model}}}};
}

RunConfig RunConfig::from_json(const Json& j) {
  reject_unknown_keys(j, {"seed", "jobs", "problem", "generation", "model", "bc", "pid", "eval", "paths"},
                      "config");
  RunConfig c;
  try {
    read_if(j, "seed", c.seed);
    read_if(j, "jobs", c.jobs);
    if (j.contains("problem")) c.problem = problem_from_json(j.at("problem"));
    if (j.contains("generation")) c.generation = generation_from_json(j.at("generation"));
    if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
    if (j.contains("bc")) c.bc = BcConfig::from_json(j.at("bc"));
    if (j.contains("pid")) c.pid = pid_from_json(j.at("pid"));
    if (j.contains("eval")) {
      const Json& e = j.at("eval");
      reject_unknown_keys(e, {"steps", "seeds", "disturbed"}, "eval");
      read_if(e, "steps", c.eval.steps);
      read_if(e, "seeds", c.eval.seeds);
      if (e.contains("disturbed")) c.eval.disturbed = noise_from_json(e.at("disturbed"));
    }
    if (j.contains("paths")) {
      const Json& p = j.at("paths");
      reject_unknown_keys(p, {"data", "model", "bc_model"}, "paths");
      read_if(p, "data", c.paths.data);
      read_if(p, "model", c.paths.model);
      read_if(p, "bc_model", c.paths.bc_model);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.generation.seed = c.seed;
  c.generation.jobs = c.jobs;
  c.validate();
  return c;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json* node = &j;
  std::stringstream parts(key);
  for (std::string part; std::getline(parts, part, '.');) {
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    node = &(*node)[part];
  }
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = std::move(value);
}

RunConfig resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  Json j = RunConfig{}.to_json();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw IoError(file.string() + ": cannot open config file");
    const Json user = Json::parse(in, nullptr, false, true);
    if (user.is_discarded()) throw ConfigError(file.string() + ": malformed JSON");
    // Validate the file on its own first so unknown keys are reported against it.
    RunConfig::from_json(user);
    j.merge_patch(user);
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return RunConfig::from_json(j);
}

}  // namespace ilsrd
