// Copyright 2026 The d2tx Authors
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


#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

const std::filesystem::path kData = D2TX_TEST_DATA;
const std::string kCli = D2TX_CLI_BIN;

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is discarded.
Run cli(const std::string& args) {
  Run r;
  std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("d2tx_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
            "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CliTest, SurvivalFunction) {
  auto r = cli("stats --sf 6.45 18");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "chi2,df,p\n6.4500,18,0.99400\n");
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("stats --test chi").code, 1);  // no table
  EXPECT_EQ(cli("--set colour=red stats --sf 1 2").code, 1);
  EXPECT_EQ(cli("convert --input '" + (kData / "e2e_sample.csv").string() +
                "' --format yaml --output-dir '" + dir_.string() + "'")
                .code,
            1);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(CliTest, RuntimeErrorsExitTwo) {
  auto r = cli("--seed 0 --bridge tcp:127.0.0.1:1 extend --method dataug --input '" +
               (kData / "restaurants.jsonl").string() + "' --output-dir '" + dir_.string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "corpus.jsonl"));
}

TEST_F(CliTest, ConfigFileAndOverrides) {
  auto cfg = dir_ / "run.conf";
  std::ofstream(cfg) << "test = kappa\nratings = " << (kData / "ratings_two.csv").string() << "\n";
  auto r = cli("--config '" + cfg.string() + "' stats");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "raters,items,kappa\n2,3,0.3333\n");
}

TEST_F(CliTest, ExtendIsDeterministicAcrossRunsAndThreads) {
  std::string base = "--seed 0 --mock-bridge extend --method dataug --tier L --input '" +
                     (kData / "restaurants.jsonl").string() + "'";
  ASSERT_EQ(cli(base + " --threads 1 --output-dir '" + (dir_ / "a").string() + "'").code, 0);
  ASSERT_EQ(cli(base + " --threads 1 --output-dir '" + (dir_ / "b").string() + "'").code, 0);
  ASSERT_EQ(cli(base + " --threads 3 --output-dir '" + (dir_ / "c").string() + "'").code, 0);
  auto a = slurp(dir_ / "a" / "corpus.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "corpus.jsonl"));
  EXPECT_EQ(a, slurp(dir_ / "c" / "corpus.jsonl"));
}

TEST_F(CliTest, ExternalAdapterMatchesBuiltInMock) {
  std::string base = "--seed 0 extend --method dataug --tier S --input '" +
                     (kData / "restaurants.jsonl").string() + "'";
  ASSERT_EQ(cli("--mock-bridge " + base + " --output-dir '" + (dir_ / "a").string() + "'").code,
            0);
  std::string adapter = std::string("stdio:") + D2TX_MOCK_ADAPTER_BIN + " --seed 0";
  ASSERT_EQ(cli("--bridge '" + adapter + "' " + base + " --output-dir '" + (dir_ / "b").string() +
                "'")
                .code,
            0);
  EXPECT_EQ(slurp(dir_ / "a" / "corpus.jsonl"), slurp(dir_ / "b" / "corpus.jsonl"));
}

}  // namespace
