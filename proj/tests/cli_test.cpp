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

// Drives the ilsrd executable end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ilsrd/run_config.hpp"

namespace fs = std::filesystem;

namespace ilsrd {
namespace {

class Cli : public ::testing::Test {
 protected:
  fs::path dir = fs::temp_directory_path() /
                 ("ilsrd_cli_" + std::to_string(::getpid()) + "_" +
                  ::testing::UnitTest::GetInstance()->current_test_info()->name());
  void SetUp() override { fs::create_directories(dir); }
  void TearDown() override { fs::remove_all(dir); }

  // Runs the CLI in `dir`; stderr goes to dir/log.txt.
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" ILSRD_CLI "' " + args +
                            " > stdout.txt 2> log.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string read(const fs::path& rel) const {
    std::ifstream in(dir / rel, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  std::map<std::string, std::string> tree(const fs::path& rel) const {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir / rel)) {
      if (e.is_regular_file()) out[fs::relative(e.path(), dir / rel).string()] = read(e.path());
    }
    return out;
  }
};

const char* kTiny =
    " --set model.d=8 --set model.heads=2 --set model.encoder_layers=1 --set model.decoder_layers=1"
    " --set model.n=4 --set model.z_dim=2 --set model.epochs=1 --set model.samples_per_epoch=8"
    " --set model.batch_size=4 --set bc.hidden=8 --set bc.epochs=1 --set bc.samples_per_epoch=8";

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("eval --out r.json --no-such-flag"), 2);
  EXPECT_EQ(run("eval --out r.json --noise sometimes"), 2);
  EXPECT_NE(read("log.txt").find("Usage"), std::string::npos);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, InvalidConfigExitsTwo) {
  EXPECT_EQ(run("gen-demos --set model.nope=1"), 2);
  EXPECT_NE(read("log.txt").find("unknown config key 'model.nope'"), std::string::npos);
  EXPECT_EQ(run("gen-demos --set problem.mpc.Nc=40"), 2);
  EXPECT_EQ(run("gen-demos --set model.kappa=-0.1"), 2);
  std::ofstream(dir / "bad.json") << R"({"model": {"d": 64, "depth": 3}})";
  EXPECT_EQ(run("gen-demos --config bad.json"), 2);
  EXPECT_NE(read("log.txt").find("depth"), std::string::npos);
}

TEST_F(Cli, GenDemosIsReproducibleAndLogsConfig) {
  ASSERT_EQ(run("gen-demos --n-traj 2 --steps 20 --seed 11 --out a"), 0);
  const std::string log = read("log.txt");
  EXPECT_NE(log.find("resolved config: "), std::string::npos);
  EXPECT_NE(log.find("root seed: 11"), std::string::npos);
  ASSERT_EQ(run("gen-demos --n-traj 2 --steps 20 --seed 11 --out b"), 0);
  const auto a = tree("a"), b = tree("b");
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  const auto manifest = nlohmann::json::parse(a.at("manifest.json"));
  EXPECT_EQ(manifest.at("global_seed").get<int>(), 11);
  EXPECT_EQ(manifest.at("step_count").get<int>(), 20);
}

TEST_F(Cli, ConfigFileAndOverridesCompose) {
  std::ofstream(dir / "c.json") << R"({"seed": 5, "generation": {"n_traj": 1, "steps": 10}})";
  ASSERT_EQ(run("gen-demos --config c.json --set generation.steps=12 --out d"), 0);
  const auto manifest = nlohmann::json::parse(read("d/manifest.json"));
  EXPECT_EQ(manifest.at("global_seed").get<int>(), 5);
  EXPECT_EQ(manifest.at("trajectory_count").get<int>(), 1);
  EXPECT_EQ(manifest.at("step_count").get<int>(), 12);
}

TEST_F(Cli, ExportPlotsIsIdempotent) {
  ASSERT_EQ(run("gen-demos --n-traj 2 --steps 15 --out data"), 0);
  ASSERT_EQ(run("export-plots --dataset data --out p1"), 0);
  ASSERT_EQ(run("export-plots --dataset data --out p1"), 0);
  ASSERT_EQ(run("export-plots --dataset data --out p2"), 0);
  const auto p1 = tree("p1");
  EXPECT_EQ(p1.size(), 26u);
  EXPECT_EQ(p1, tree("p2"));
  EXPECT_EQ(p1.at("traj_001/q_w.csv").substr(0, 16), "t,true,observed\n");
  EXPECT_EQ(run("export-plots --out p3"), 2);
  EXPECT_EQ(run("export-plots --dataset nowhere --out p3"), 2);
}

TEST_F(Cli, TrainEvalExportPipeline) {
  ASSERT_EQ(run("gen-demos --n-traj 2 --steps 30 --out data"), 0);
  ASSERT_EQ(run(std::string("train") + kTiny + " --out m/il.ckpt"), 0);
  EXPECT_TRUE(fs::exists(dir / "m/il.ckpt.curve.csv"));
  ASSERT_EQ(run(std::string("train-bc") + kTiny + " --out m/bc.ckpt"), 0);
  ASSERT_EQ(run(std::string("eval") + kTiny +
                " --policies pid,bc,ilsrd,ilsrd-nota --model m/il.ckpt --bc-model m/bc.ckpt"
                " --steps 30 --noise off --out r.json --episodes ep"),
            0);
  const auto report = nlohmann::json::parse(read("r.json"));
  ASSERT_EQ(report.at("rows").size(), 4u);
  for (const auto& row : report.at("rows")) EXPECT_EQ(row.at("episodes").size(), 5u);
  EXPECT_EQ(report.at("meta").at("seed").get<int>(), 7);

  ASSERT_EQ(run("export-plots --episodes ep --out pe"), 0);
  const auto series = tree("pe");
  EXPECT_EQ(series.size(), 4u * 13u);
  EXPECT_EQ(series.at("nominal/pid/r_x.csv").substr(0, 47),
            "t,seed_101,seed_202,seed_303,seed_404,seed_505\n");
  ASSERT_EQ(run("export-plots --episodes ep --out pe"), 0);
  EXPECT_EQ(series, tree("pe"));

  EXPECT_EQ(run("eval --policies bc --bc-model missing.ckpt --steps 30 --out r2.json"), 1);
  ASSERT_EQ(run("eval --policies bc,pid --bc-model missing.ckpt --steps 30 --noise off --out r2.json"
                " --skip-missing"),
            0);
  EXPECT_EQ(nlohmann::json::parse(read("r2.json")).at("rows").size(), 2u);
}

TEST_F(Cli, GradCheckPassesEveryPrimitive) {
  ASSERT_EQ(run("grad-check --points 2"), 0);
  const std::string out = read("stdout.txt");
  EXPECT_NE(out.find("matmul"), std::string::npos);
  EXPECT_EQ(out.find("FAIL"), std::string::npos);
}

TEST(RunConfig, RoundTripsAndRejectsUnknownKeys) {
  const RunConfig a;
  const RunConfig b = RunConfig::from_json(a.to_json());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  nlohmann::json j = a.to_json();
  j["eval"]["episodes"] = 3;
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
  j = a.to_json();
  EXPECT_THROW(apply_override(j, "pid.kp_r"), ConfigError);
  apply_override(j, "pid.kp_r=[1,2,3]");
  EXPECT_EQ(RunConfig::from_json(j).pid.kp_r, Vec3(1, 2, 3));
  apply_override(j, "paths.data=some/dir");
  EXPECT_EQ(RunConfig::from_json(j).paths.data, "some/dir");
  apply_override(j, "pid.thrust_limit=0.5");
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
}

TEST(RunConfig, ShippedConfigsResolve) {
  for (const char* name : {"default.json", "desk.json"}) {
    EXPECT_NO_THROW(resolve_config(fs::path(ILSRD_SOURCE_DIR) / "configs" / name, {})) << name;
  }
  const RunConfig desk = resolve_config(fs::path(ILSRD_SOURCE_DIR) / "configs" / "desk.json", {});
  EXPECT_EQ(desk.generation.n_traj, 10);
  EXPECT_EQ(desk.generation.steps, 500);
  EXPECT_EQ(desk.model.d, 64);
  EXPECT_EQ(desk.model.n, 100);
  EXPECT_EQ(desk.model.epochs, 50);
}

}  // namespace
}  // namespace ilsrd
