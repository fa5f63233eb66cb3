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

#include "ilsrd/plot_export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ilsrd {

namespace fs = std::filesystem;

const std::array<const char*, kStateDim> kChannelNames = {
    "r_x", "r_y", "r_z", "v_x", "v_y", "v_z", "q_w", "q_x", "q_y", "q_z", "omega_x", "omega_y", "omega_z"};

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// true_* columns of one episode CSV, as the original text cells.
std::vector<std::array<std::string, kStateDim>> read_true_states(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  static const char* kShort[] = {"rx", "ry", "rz", "vx", "vy", "vz", "qw",
                                 "qx", "qy", "qz", "wx", "wy", "wz"};
  const std::vector<std::string> header = split(line);
  std::array<std::size_t, kStateDim> col{};
  for (std::size_t c = 0; c < kStateDim; ++c) {
    const auto it = std::find(header.begin(), header.end(), std::string("true_") + kShort[c]);
    if (it == header.end()) throw IoError(path.string() + ": missing column true_" + kShort[c]);
    col[c] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<std::array<std::string, kStateDim>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    std::array<std::string, kStateDim> row;
    for (std::size_t c = 0; c < kStateDim; ++c) {
      if (col[c] >= cells.size()) throw IoError(path.string() + ": short row");
      row[c] = cells[col[c]];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<fs::path> export_dataset_series(const Dataset& ds, const fs::path& out) {
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const Demonstration& d = ds.trajectories[i];
    char dir[32];
    std::snprintf(dir, sizeof dir, "traj_%03zu", i);
    for (std::size_t c = 0; c < kStateDim; ++c) {
      std::string text = "t,true,observed\n";
      for (std::size_t t = 0; t < d.true_states.size(); ++t) {
        text += std::to_string(t) + ',' + format_double(d.true_states[t].to_array()[c]) + ',' +
                format_double(d.observed_states[t].to_array()[c]) + '\n';
      }
      const fs::path p = out / dir / (std::string(kChannelNames[c]) + ".csv");
      write_text(p, text);
      written.push_back(p);
    }
  }
  return written;
}

std::vector<fs::path> export_episode_series(const fs::path& episodes, const fs::path& out) {
  if (!fs::is_directory(episodes)) throw IoError(episodes.string() + ": not a directory");
  // (condition, policy) -> seed -> rows; std::map keeps the output order stable.
  std::map<std::pair<std::string, std::string>,
           std::map<std::string, std::vector<std::array<std::string, kStateDim>>>>
      groups;
  for (const auto& cond : fs::directory_iterator(episodes)) {
    if (!cond.is_directory()) continue;
    for (const auto& pol : fs::directory_iterator(cond.path())) {
      if (!pol.is_directory()) continue;
      for (const auto& f : fs::directory_iterator(pol.path())) {
        const std::string stem = f.path().stem().string();
        if (f.path().extension() != ".csv" || stem.rfind("seed_", 0) != 0) continue;
        groups[{cond.path().filename().string(), pol.path().filename().string()}][stem] =
            read_true_states(f.path());
      }
    }
  }
  if (groups.empty()) throw IoError(episodes.string() + ": no episode CSVs found");

  std::vector<fs::path> written;
  for (const auto& [key, seeds] : groups) {
    std::size_t len = 0;
    for (const auto& [_, rows] : seeds) len = std::max(len, rows.size());
    for (std::size_t c = 0; c < kStateDim; ++c) {
      std::string text = "t";
      for (const auto& [name, _] : seeds) text += ',' + name;
      text += '\n';
      for (std::size_t t = 0; t < len; ++t) {
        text += std::to_string(t);
        for (const auto& [_, rows] : seeds) text += ',' + (t < rows.size() ? rows[t][c] : std::string());
        text += '\n';
      }
      const fs::path p = out / key.first / key.second / (std::string(kChannelNames[c]) + ".csv");
      write_text(p, text);
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace ilsrd
