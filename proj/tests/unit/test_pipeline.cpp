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

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "d2tx/corpus.hpp"
#include "d2tx/corpus_io.hpp"
#include "d2tx/error.hpp"
#include "d2tx/pipeline.hpp"

using namespace d2tx;
using namespace d2tx::pipeline;
namespace fs = std::filesystem;

namespace {

const fs::path kData = D2TX_TEST_DATA;

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("d2tx_pipe_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
            "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) {
    auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  fs::path dir_;
};

TEST_F(PipelineTest, ConfigLayers) {
  Config c;
  c.load_string("# comment\nseed = 3\ntier = M\n");
  EXPECT_EQ(c.get_int("seed", 0), 3);
  c.set("seed", "9");
  EXPECT_EQ(c.get_int("seed", 0), 9);
  EXPECT_EQ(c.get_or("tier", "S"), "M");
  EXPECT_FALSE(c.has("threads"));
  EXPECT_THROW(c.load_string("colour = red\n"), ValidationError);
  EXPECT_THROW(c.set("colour", "red"), ValidationError);
  EXPECT_THROW(c.load_string("no equals sign\n"), ParseError);
  c.set("threads", "two");
  EXPECT_THROW(c.get_int("threads", 1), ValidationError);
  c.set("include_dev", "maybe");
  EXPECT_THROW(c.get_bool("include_dev", false), ValidationError);
  EXPECT_THROW(c.require("input"), ValidationError);
}

TEST_F(PipelineTest, ConvertE2e) {
  Config c;
  c.set("input", (kData / "e2e_sample.csv").string());
  c.set("format", "e2e");
  c.set("output_dir", dir_.string());
  auto r = run_command("convert", c);
  auto corpus = corpus::read_canonical(dir_ / "corpus.jsonl");
  EXPECT_EQ(corpus.instances.size(), 3u);
  EXPECT_TRUE(fs::exists(dir_ / "report.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "report.md"));
  EXPECT_NE(r.output.find("train,3,3,"), std::string::npos) << r.output;
}

TEST_F(PipelineTest, ConvertErrors) {
  Config c;
  c.set("input", (kData / "e2e_sample.csv").string());
  c.set("format", "yaml");
  c.set("output_dir", dir_.string());
  EXPECT_THROW(run_command("convert", c), InvalidArgument);
  c.set("input", (dir_ / "missing.csv").string());
  EXPECT_THROW(run_command("convert", c), ValidationError);
  EXPECT_THROW(run_command("transmogrify", c), InvalidArgument);
}

TEST_F(PipelineTest, ConvertEmptyFileWarns) {
  Config c;
  c.set("input", write("empty.csv", "mr,ref\n").string());
  c.set("format", "e2e");
  c.set("output_dir", (dir_ / "out").string());
  auto r = run_command("convert", c);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_TRUE(corpus::read_canonical(dir_ / "out" / "corpus.jsonl").instances.empty());
}

TEST_F(PipelineTest, ConvertBadRowsNeedOptIn) {
  Config c;
  c.set("input", write("bad.csv", "mr,ref\nname[A],A is here.\nbroken,B.\n").string());
  c.set("format", "e2e");
  c.set("output_dir", (dir_ / "out").string());
  EXPECT_THROW(run_command("convert", c), ValidationError);
  c.set("skip_invalid", "true");
  auto r = run_command("convert", c);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("line 3"), std::string::npos);
}

TEST_F(PipelineTest, ExtendNoneCopiesVerbatim) {
  Config c;
  c.set("input", (kData / "restaurants.jsonl").string());
  c.set("method", "none");
  c.set("seed", "0");
  c.set("output_dir", dir_.string());
  run_command("extend", c);
  EXPECT_EQ(corpus::read_file(dir_ / "corpus.jsonl"),
            corpus::read_file(kData / "restaurants.jsonl"));
}

TEST_F(PipelineTest, ExtendNeedsSeed) {
  Config c;
  c.set("input", (kData / "restaurants.jsonl").string());
  c.set("method", "dataug");
  c.set("output_dir", dir_.string());
  EXPECT_THROW(run_command("extend", c), ValidationError);
  c.set("seed", "-1");
  EXPECT_THROW(run_command("extend", c), ValidationError);
  c.set("seed", "0");
  c.set("method", "magic");
  EXPECT_THROW(run_command("extend", c), ValidationError);
}

std::string extend_dataug(const fs::path& out, const std::string& tier, int threads) {
  Config c;
  c.set("input", (kData / "restaurants.jsonl").string());
  c.set("method", "dataug");
  c.set("seed", "0");
  c.set("tier", tier);
  c.set("threads", std::to_string(threads));
  c.set("output_dir", out.string());
  run_command("extend", c);
  return corpus::read_file(out / "corpus.jsonl");
}

TEST_F(PipelineTest, ExtendDataugDeterministic) {
  auto a = extend_dataug(dir_ / "a", "M", 1);
  auto b = extend_dataug(dir_ / "b", "M", 1);
  auto c = extend_dataug(dir_ / "c", "M", 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(corpus::read_file(dir_ / "a" / "report.csv"), corpus::read_file(dir_ / "c" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "qa.csv"));
}

TEST_F(PipelineTest, ExtendDataugTierBounds) {
  const std::pair<const char*, std::size_t> tiers[] = {{"S", 2}, {"M", 3}, {"L", 6}, {"XL", 11}};
  std::size_t prev = 0;
  for (const auto& [tier, factor] : tiers) {
    auto out = dir_ / tier;
    extend_dataug(out, tier, 2);
    auto c = corpus::read_canonical(out / "corpus.jsonl");
    std::size_t train = c.count(corpus::Split::kTrain);
    EXPECT_LE(train, factor * 10) << tier;
    EXPECT_GT(train, 10u) << tier;
    EXPECT_GE(train, prev) << tier;
    prev = train;
    EXPECT_EQ(c.count(corpus::Split::kDev), 1u);
    EXPECT_EQ(c.count(corpus::Split::kTest), 3u);
  }
}

TEST_F(PipelineTest, ExtendPseulab) {
  Config c;
  c.set("input", (kData / "restaurants.jsonl").string());
  c.set("method", "pseulab");
  c.set("seed", "0");
  c.set("unlabeled", (kData / "unlabeled.jsonl").string());
  c.set("mock_fixture", (kData / "mock_fixture.json").string());
  c.set("output_dir", dir_.string());
  auto r = run_command("extend", c);
  // The manifest holds fewer documents than the tier asks for.
  EXPECT_FALSE(r.warnings.empty());
  auto out = corpus::read_canonical(dir_ / "corpus.jsonl");
  EXPECT_GE(out.count(corpus::Split::kTrain), 10u);
  EXPECT_EQ(out.count(corpus::Split::kTest), 3u);

  c.set("unlabeled", write("none.jsonl", "").string());
  c.set("output_dir", (dir_ / "empty").string());
  auto e = run_command("extend", c);
  EXPECT_FALSE(e.warnings.empty());
}

TEST_F(PipelineTest, EvalQualityPerfectOutputs) {
  auto corpus = corpus::read_canonical(kData / "restaurants.jsonl");
  std::string lines;
  for (const auto& g : corpus::group_references(corpus.in_split(corpus::Split::kTest))) {
    lines += "{\"id\":\"" + g.ids.front() + "\",\"text\":" + "\"" + g.texts.front() + "\"}\n";
  }
  Config c;
  c.set("which", "quality");
  c.set("seed", "0");
  c.set("input", (kData / "restaurants.jsonl").string());
  c.set("outputs", write("outputs.jsonl", lines).string());
  auto r = run_command("eval", c);
  auto rows = corpus::parse_csv(r.output);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0].fields[4], "BLEU");
  EXPECT_EQ(rows[1].fields[4], "100.00");
  EXPECT_EQ(rows[1].fields[8], "1.0000");

  c.set("outputs", write("short.jsonl", "{\"id\":\"t01\",\"text\":\"x\"}\n").string());
  EXPECT_THROW(run_command("eval", c), ValidationError);
}

TEST_F(PipelineTest, EvalLabelsWithMock) {
  Config c;
  c.set("which", "labels");
  c.set("seed", "0");
  c.set("input", (kData / "restaurants.jsonl").string());
  auto r = run_command("eval", c);
  auto rows = corpus::parse_csv(r.output);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0].fields[2], "dev_P");
}

TEST_F(PipelineTest, StatsChiFromFile) {
  Config c;
  c.set("test", "chi");
  c.set("table", (kData / "error_counts.csv").string());
  c.set("drop_empty_rows", "true");
  c.set("output_dir", dir_.string());
  auto r = run_command("stats", c);
  EXPECT_NE(r.output.find("nl,6.4455,18,0.99403"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("e2e,28.5237,18,0.05452"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("all,26.4330,20,0.15198"), std::string::npos) << r.output;
  auto report = corpus::read_file(dir_ / "report.csv");
  EXPECT_NE(report.find("Repetition,17,a,20,a,1,b"), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(dir_ / "chi_square.csv"));

  c.set("drop_empty_rows", "false");
  EXPECT_THROW(run_command("stats", c), ValidationError);
}

TEST_F(PipelineTest, StatsKappaSfLikertSample) {
  Config c;
  c.set("test", "kappa");
  c.set("ratings", (kData / "ratings_two.csv").string());
  EXPECT_EQ(run_command("stats", c).output, "raters,items,kappa\n2,3,0.3333\n");

  Config sf;
  sf.set("test", "sf");
  sf.set("x", "6.45");
  sf.set("df", "18");
  EXPECT_EQ(run_command("stats", sf).output, "chi2,df,p\n6.4500,18,0.99400\n");
  sf.set("df", "0");
  EXPECT_THROW(run_command("stats", sf), ValidationError);

  Config lk;
  lk.set("test", "likert");
  lk.set("ratings", (kData / "likert.csv").string());
  auto l = run_command("stats", lk);
  EXPECT_NE(l.output.find("web,NoExt,5.00,1.41,,,2.50,2.12"), std::string::npos) << l.output;
  EXPECT_FALSE(l.warnings.empty());

  Config sm;
  sm.set("test", "sample");
  sm.set("pool", (kData / "eval_pool.csv").string());
  sm.set("seed", "5");
  sm.set("output_dir", dir_.string());
  auto a = run_command("stats", sm);
  auto b = run_command("stats", sm);
  EXPECT_EQ(a.output, b.output);
  auto rows = corpus::parse_csv(a.output);
  EXPECT_EQ(rows.size(), 1u + 80u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    int slots = std::stoi(rows[i].fields[3]);
    EXPECT_GE(slots, 2);
    EXPECT_LE(slots, 6);
  }
  EXPECT_TRUE(fs::exists(dir_ / "manifest.csv"));
}

TEST_F(PipelineTest, ReportCountsTrainOnly) {
  Config c;
  c.set("input", (kData / "restaurants.jsonl").string());
  auto r = run_command("report", c);
  auto rows = corpus::parse_csv(r.output);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].fields[4], "10");
  c.set("include_dev", "true");
  EXPECT_EQ(corpus::parse_csv(run_command("report", c).output)[1].fields[4], "11");
}

TEST(Formatting, Helpers) {
  EXPECT_EQ(format_fixed(-0.0001, 2), "0.00");
  EXPECT_EQ(format_fixed(2.345, 1), "2.3");
  EXPECT_EQ(csv_line({"a", "b,c", "d\"e"}), "a,\"b,c\",\"d\"\"e\"\n");
  EXPECT_EQ(to_markdown({{"h", "k"}, {"a|b", "c"}}), "| h | k |\n|---|---|\n| a\\|b | c |\n");
}

}  // namespace
