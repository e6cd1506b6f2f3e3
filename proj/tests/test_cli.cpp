// Copyright 2026 The qncal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qncal/bayes_opt.hpp"
#include "qncal/measurement.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace qncal {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("qncal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(QNCAL_CLI) + " " + args + " >" + path("stdout.txt") + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, SimulateWritesGrid) {
  ASSERT_EQ(run("simulate --scenario sv2d --grid 5x4 --out " + path("g.csv")), 0);
  const Grid g = Grid::read_csv(path("g.csv"));
  EXPECT_EQ(g.size(), 20);
  EXPECT_EQ(g.dim(), 2);
}

TEST_F(Cli, OptimizeOnGridWritesRecord) {
  ASSERT_EQ(run("simulate --scenario sv2d --grid 8x6 --out " + path("g.csv")), 0);
  ASSERT_EQ(run("optimize --objective grid:" + path("g.csv") + " --budget 15 --seed 2 --out " + path("r.jsonl")), 0);
  std::ifstream in(path("r.jsonl"));
  const auto recs = read_jsonl(in);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].entries.size(), 15u);
  EXPECT_TRUE(recs[0].complete);
}

TEST_F(Cli, ExternalObjective) {
  ASSERT_EQ(run("optimize --objective exec:" + std::string(QNCAL_FAKE_INSTRUMENT) +
                " --domain 0:1,0:1 --budget 14 --out " + path("r.jsonl")),
            0);
  EXPECT_EQ(run("optimize --objective 'exec:" + std::string(QNCAL_FAKE_INSTRUMENT) +
                " garbage' --domain 0:1,0:1 --budget 14"),
            3);
  EXPECT_EQ(run("optimize --objective exec:" + std::string(QNCAL_FAKE_INSTRUMENT) + " --budget 14"), 2);
}

TEST_F(Cli, ArgumentErrorsExitTwo) {
  EXPECT_EQ(run("optimize --objective sim:nowhere"), 2);
  EXPECT_EQ(run("optimize --budget notanumber"), 2);
  EXPECT_EQ(run("optimize --kernel matern12"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("optimize --objective grid:" + path("missing.csv")), 3);
}

TEST_F(Cli, ConfigFileSuppliesFlagsAndFlagsOverride) {
  {
    std::ofstream cfg(path("c.json"));
    cfg << R"({"objective": "sim:sv2d", "budget": 13, "seed": 8, "kernel": "rbf"})";
  }
  ASSERT_EQ(run("optimize --config " + path("c.json") + " --budget 14 --out " + path("r.jsonl")), 0);
  std::ifstream in(path("r.jsonl"));
  const auto recs = read_jsonl(in);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].entries.size(), 14u);
  EXPECT_EQ(recs[0].seed, 8u);
  EXPECT_EQ(recs[0].config["kernel"], "rbf");
  {
    std::ofstream bad(path("bad.json"));
    bad << "{not json";
  }
  EXPECT_EQ(run("optimize --config " + path("bad.json")), 2);
}

TEST_F(Cli, BenchmarkIsByteReproducible) {
  const std::string common = "benchmark --objective sim:sv2d --noise poisson --trials 3 --budget 13 --seed 5";
  ASSERT_EQ(run(common + " --curve-out " + path("c1.csv") + " --out " + path("r1.jsonl")), 0);
  ASSERT_EQ(run(common + " --curve-out " + path("c2.csv") + " --out " + path("r2.jsonl") + " --threads 1"), 0);
  EXPECT_EQ(slurp(path("c1.csv")), slurp(path("c2.csv")));
  EXPECT_EQ(slurp(path("r1.jsonl")), slurp(path("r2.jsonl")));
  EXPECT_EQ(slurp(path("c1.csv")).rfind("iteration,mean,std,min,max\n", 0), 0u);
}

TEST_F(Cli, CompareWritesReport) {
  ASSERT_EQ(run("compare --objective sim:sv2d --axis acq --variants lcb,ei --trials 2 --budget 13 --at 13 "
                "--resamples 200 --report-out " + path("rep.json")),
            0);
  std::ifstream in(path("rep.json"));
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["variants"].size(), 2u);
  EXPECT_EQ(j["iteration"], 13);
}

TEST_F(Cli, GradientDescentBaseline) {
  ASSERT_EQ(run("gd-baseline --objective sim:sv2d --step 0.01 --fd-step 0.001 --budget 9 --out " + path("gd.jsonl")), 0);
  std::ifstream in(path("gd.jsonl"));
  const auto recs = read_jsonl(in);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].method, "gd");
  EXPECT_EQ(recs[0].entries.size(), 9u);
}

}  // namespace
}  // namespace qncal
