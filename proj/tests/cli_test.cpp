/*
 * Copyright 2026 The zsntta Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

namespace {

const std::string kCli = ZSNTTA_CLI_PATH;
const std::string kSmall =
    "k=4,d=16,n_per_class=50,n_ood=200,ood_clusters=1,concentration=15,ood_concentration=5,common_weight=3,"
    "noise_bank_size=50";

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, SyntheticRunSucceeds) {
  oracle::TempDir dir("cli");
  EXPECT_EQ(run("run --synthetic " + kSmall + " --seed 0,1 --noise-ratio 0.3,0.5 --out " + dir.path().string()), 0);
  const std::string summary = read_text(dir.path() / "summary.tsv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 5);
  EXPECT_NE(summary.find("synthetic_gaussian_feature"), std::string::npos);
}

TEST(Cli, InvalidSpecExitsTwo) {
  EXPECT_EQ(run("run --synthetic " + kSmall + " --method tent"), 2);
  EXPECT_EQ(run("run --synthetic " + kSmall + " --threshold fixed:2"), 2);
  EXPECT_EQ(run("run --synthetic " + kSmall + " --noise-ratio 1.2"), 2);
  EXPECT_EQ(run("run --synthetic k=1"), 2);
  EXPECT_EQ(run("run"), 2);
  EXPECT_EQ(run("run --id-features /nonexistent/id.znta"), 2);
  EXPECT_EQ(run("run --synthetic " + kSmall + " --bogus-flag"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST(Cli, FailingCellExitsOne) {
  EXPECT_EQ(run("run --synthetic " + kSmall + " --noise-ratio 0.5,0.95"), 1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST(Cli, SynthFilesFeedRunAndHistogram) {
  oracle::TempDir dir("cli");
  const std::string d = dir.path().string();
  ASSERT_EQ(run("synth --synthetic " + kSmall + " --out " + d + "/data"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "data" / "id.znta.names"));
  ASSERT_EQ(run("run --id-features " + d + "/data/id.znta --ood-features " + d + "/data/ood.znta --noise-bank gaussian:" +
                d + "/data/noise.znta --decision-logs --out " + d + "/out"),
            0);
  EXPECT_NE(read_text(dir.path() / "out" / "cell_0000.txt").find("noise_type=gaussian"), std::string::npos);
  const std::string log = d + "/out/cell_0000_decisions.tsv";
  ASSERT_TRUE(std::filesystem::exists(log));
  const std::string cmd = kCli + " histogram --log " + log + " --bins 5 --score detector > " + d + "/hist.tsv";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const std::string hist = read_text(dir.path() / "hist.tsv");
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 6);
  EXPECT_EQ(run("histogram --log " + d + "/missing.tsv"), 2);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  oracle::TempDir dir("cli");
  const auto cfg = dir.path() / "exp.toml";
  std::ofstream(cfg) << "[run]\nsynthetic = \"" << kSmall << "\"\nmethod = \"frozen\"\nseed = [3, 4]\n";
  ASSERT_EQ(run("run --config " + cfg.string() + " --seed 7 --out " + dir.path().string()), 0);
  const std::string summary = read_text(dir.path() / "summary.tsv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2);
  EXPECT_NE(summary.find("frozen"), std::string::npos);
  EXPECT_NE(read_text(dir.path() / "cell_0000.txt").find("seed=7"), std::string::npos);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  oracle::TempDir dir("cli");
  ASSERT_EQ(run("run --synthetic " + kSmall, "ZSNTTA_OUT_DIR=" + dir.path().string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "summary.tsv"));
}

}  // namespace
