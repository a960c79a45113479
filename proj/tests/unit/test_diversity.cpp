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

#include <algorithm>
#include <cmath>
#include <random>

#include "d2tx/diversity.hpp"
#include "d2tx/error.hpp"
#include "support/oracles.hpp"

using namespace d2tx;
using namespace d2tx::diversity;

namespace {

using namespace d2tx::oracle;

Tokens n_tokens(std::size_t n, const std::string& word = "w") {
  return Tokens(n, word);
}

TEST(Surface, Examples) {
  auto a = surface_stats({n_tokens(2), n_tokens(4)});
  EXPECT_DOUBLE_EQ(a.asl, 3.0);
  EXPECT_DOUBLE_EQ(a.sdsl, 1.0);
  auto b = surface_stats({n_tokens(1), n_tokens(2), n_tokens(3), n_tokens(4), n_tokens(5)});
  EXPECT_DOUBLE_EQ(b.asl, 3.0);
  EXPECT_NEAR(b.sdsl, std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(surface_stats({n_tokens(3), n_tokens(3)}).sdsl, 0.0);
  EXPECT_THROW(surface_stats({}), InvalidArgument);
}

TEST(Lexical, SegmentedTtr) {
  Tokens first;
  for (int i = 0; i < 100; ++i) first.push_back("t" + std::to_string(i));
  auto st = lexical_stats({first, n_tokens(100, "same")});
  EXPECT_NEAR(st.ttr1, 0.505, 1e-12);
  EXPECT_EQ(st.types, 101u);
  EXPECT_NEAR(lexical_stats({n_tokens(100)}).ttr1, 0.01, 1e-12);
  EXPECT_NEAR(lexical_stats({first}).ttr1, 1.0, 1e-12);
  EXPECT_THROW(lexical_stats({}), InvalidArgument);
}

TEST(Lexical, TrailingPartialSegmentIsDiscarded) {
  Tokens t;
  for (int i = 0; i < 100; ++i) t.push_back("t" + std::to_string(i));
  for (int i = 0; i < 50; ++i) t.push_back("x");
  EXPECT_NEAR(lexical_stats({t}).ttr1, 1.0, 1e-12);
}

TEST(Lexical, ShortOutputWarns) {
  auto st = lexical_stats({{"a", "b", "a"}});
  EXPECT_NEAR(st.ttr1, 2.0 / 3.0, 1e-12);
  EXPECT_FALSE(st.warnings.empty());
}

TEST(Lexical, BigramsStayInsideOneOutput) {
  // 101 outputs of "a b": bigram stream is 101 copies of "a b" only.
  std::vector<Tokens> outs(101, Tokens{"a", "b"});
  auto st = lexical_stats(outs);
  EXPECT_NEAR(st.ttr2, 0.01, 1e-12);
}

TEST(Novelty, SetArithmetic) {
  auto n = novelty_stats({"a b x"}, {"a b c d"});
  EXPECT_DOUBLE_EQ(n.coverage, 0.5);
  EXPECT_NEAR(n.novelty, 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(novelty_stats({"b a", "d"}, {"a b c d"}).novelty, 0.0);
  EXPECT_DOUBLE_EQ(novelty_stats({"a b", "c d"}, {"a  b"}).pct_novel, 0.5);
  auto same = novelty_stats({"A b, c."}, {"a B c"});
  EXPECT_DOUBLE_EQ(same.coverage, 1.0);
  EXPECT_DOUBLE_EQ(same.novelty, 0.0);
  EXPECT_THROW(novelty_stats({}, {"a"}), InvalidArgument);
  EXPECT_THROW(novelty_stats({"a"}, {}), InvalidArgument);
}

TEST(LocalRecall, Examples) {
  RecallPair p{{"the", "quick", "fox", "sleeps"},
               {"the", "quick", "fox", "jumps"},
               {"DET", "ADJ", "NOUN", "VERB"}};
  EXPECT_NEAR(local_recall({p}), 2.0 / 3.0, 1e-15);
  RecallPair same{p.reference, p.reference, p.reference_tags};
  EXPECT_DOUBLE_EQ(local_recall({same}), 1.0);
  RecallPair none{{"zzz"}, p.reference, p.reference_tags};
  EXPECT_DOUBLE_EQ(local_recall({none}), 0.0);
  RecallPair skip{{"a"}, {"the"}, {"DET"}};
  EXPECT_NEAR(local_recall({p, skip}), 2.0 / 3.0, 1e-15);
  RecallPair bad{{"a"}, {"the", "x"}, {"DET"}};
  EXPECT_THROW(local_recall({bad}), InvalidArgument);
}

TEST(Property, RatiosStayInUnitInterval) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    DiversityInput in;
    in.outputs = random_texts(rng, size(rng));
    in.pool = random_texts(rng, size(rng));
    in.segment = 20;
    auto r = diversity_report(in);
    for (double v : {r.ttr1, r.ttr2, r.pct_novel, r.coverage, r.novelty}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    EXPECT_GE(r.ttr1, 1.0 / 20.0 - 1e-12);
    EXPECT_GE(r.asl, 1.0);
  }
}

TEST(Property, PctNovelShrinksAsPoolGrows) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto outputs = random_texts(rng, 10);
    auto pool = random_texts(rng, 5);
    double prev = novelty_stats(outputs, pool).pct_novel;
    for (int k = 0; k < 5; ++k) {
      pool.push_back(outputs[static_cast<std::size_t>(k)]);
      for (const auto& t : random_texts(rng, 2)) pool.push_back(t);
      double now = novelty_stats(outputs, pool).pct_novel;
      EXPECT_LE(now, prev);
      prev = now;
    }
  }
}

TEST(Property, OrderInvariantStatistics) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    DiversityInput in;
    in.outputs = random_texts(rng, 15);
    in.pool = random_texts(rng, 15);
    auto a = diversity_report(in);
    std::shuffle(in.outputs.begin(), in.outputs.end(), rng);
    auto b = diversity_report(in);
    EXPECT_DOUBLE_EQ(a.asl, b.asl);
    EXPECT_NEAR(a.sdsl, b.sdsl, 1e-12);
    EXPECT_EQ(a.types, b.types);
    EXPECT_DOUBLE_EQ(a.pct_novel, b.pct_novel);
    EXPECT_DOUBLE_EQ(a.coverage, b.coverage);
    EXPECT_DOUBLE_EQ(a.novelty, b.novelty);
  }
}

TEST(Report, SentenceSplitFeedsAsl) {
  DiversityInput in;
  in.outputs = {"Wildwood is a pub. It is cheap."};
  in.pool = {"Wildwood is a pub."};
  auto r = diversity_report(in);
  // "Wildwood is a pub ." and "It is cheap ." count as two sentences.
  EXPECT_DOUBLE_EQ(r.asl, 4.5);
  EXPECT_DOUBLE_EQ(r.sdsl, 0.5);
  EXPECT_FALSE(r.local_recall.has_value());
}

}  // namespace
