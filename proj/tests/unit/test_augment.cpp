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

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "d2tx/augment.hpp"
#include "d2tx/bridge.hpp"
#include "d2tx/corpus_io.hpp"
#include "d2tx/error.hpp"
#include "d2tx/mock_adapter.hpp"

using namespace d2tx;
using namespace d2tx::augment;
using corpus::Instance;
using corpus::MR;
using corpus::Slot;

namespace {

const std::filesystem::path kData = D2TX_TEST_DATA;

bridge::EmbeddingView view(std::vector<std::vector<double>> vectors,
                           std::vector<std::vector<double>> attention) {
  bridge::EmbeddingView v;
  std::size_t n = vectors.size(), d = vectors[0].size();
  v.vectors = bridge::Matrix(n, d);
  v.attention = bridge::Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    v.tokens.push_back("t" + std::to_string(i));
    for (std::size_t k = 0; k < d; ++k) v.vectors(i, k) = vectors[i][k];
    for (std::size_t k = 0; k < n; ++k) v.attention(i, k) = attention[i][k];
  }
  return v;
}

TEST(Tiers, VariantCounts) {
  EXPECT_EQ(variants_per_instance(Tier::kS), 1u);
  EXPECT_EQ(variants_per_instance(Tier::kM), 2u);
  EXPECT_EQ(variants_per_instance(Tier::kL), 5u);
  EXPECT_EQ(variants_per_instance(Tier::kXL), 10u);
  EXPECT_EQ(parse_tier("xl"), Tier::kXL);
  EXPECT_THROW(parse_tier("XXL"), InvalidArgument);
}

TEST(SelectTargets, Examples) {
  auto a = select_targets({"the", "big", "dog", "runs", "fast"}, {"DET", "ADJ", "NOUN", "VERB", "ADV"});
  EXPECT_EQ(a.indices, (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_EQ(a.pos_tags, (std::vector<std::string>{"ADJ", "NOUN", "ADV"}));
  EXPECT_TRUE(select_targets({"go", "run"}, {"VERB", "VERB"}).indices.empty());
  EXPECT_EQ(select_targets({"3", "dogs"}, {"NUM", "NOUN"}).indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(select_targets({"a"}, {}), InvalidArgument);
}

TEST(SimScore, IdenticalUniformViewsScoreOne) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<std::vector<double>> vec(n, std::vector<double>(5));
    for (auto& r : vec) for (auto& x : r) x = g(rng);
    std::vector<std::vector<double>> att(n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
    auto v = view(vec, att);
    for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(sim_score(v, v, t), 1.0, 1e-9);
  }
}

TEST(SimScore, HandCase) {
  auto original = view({{1, 0}, {1, 0}}, {{0.7, 0.3}, {0.3, 0.7}});
  auto substituted = view({{1, 0}, {0.5, std::sqrt(0.75)}}, {{0.5, 0.5}, {0.5, 0.5}});
  EXPECT_NEAR(sim_score(original, substituted, 1), 0.3 * 1.0 + 0.7 * 0.5, 1e-12);
  EXPECT_NEAR(sim_score(original, substituted, 1), 0.65, 1e-12);
}

TEST(SimScore, OrthogonalIsZero) {
  auto original = view({{1, 0}, {1, 0}}, {{0.5, 0.5}, {0.5, 0.5}});
  auto substituted = view({{0, 1}, {0, 2}}, {{0.5, 0.5}, {0.5, 0.5}});
  EXPECT_NEAR(sim_score(original, substituted, 0), 0.0, 1e-12);
}

TEST(SimScore, WeightsComeFromAttentionTowardsTheTarget) {
  // Column 2 of the original attention is (0.1, 0.2, 0.6); row 2 is (0.3, 0.1, 0.6).
  auto original = view({{1, 0}, {1, 0}, {1, 0}},
                       {{0.5, 0.4, 0.1}, {0.4, 0.4, 0.2}, {0.3, 0.1, 0.6}});
  auto substituted = view({{0, 1}, {1, 0}, {1, 0}},
                          {{0.2, 0.4, 0.4}, {0.2, 0.4, 0.4}, {0.2, 0.4, 0.4}});
  EXPECT_NEAR(sim_score(original, substituted, 2), 0.2 + 0.6, 1e-12);
}

TEST(SimScore, Errors) {
  auto a = view({{1, 0}}, {{1}});
  auto b = view({{1, 0}, {1, 0}}, {{0.5, 0.5}, {0.5, 0.5}});
  auto z = view({{0, 0}}, {{1}});
  auto d3 = view({{1, 0, 0}}, {{1}});
  EXPECT_THROW(sim_score(a, b, 0), InvalidArgument);
  EXPECT_THROW(sim_score(a, z, 0), InvalidArgument);
  EXPECT_THROW(sim_score(a, d3, 0), InvalidArgument);
}

TEST(Filter, Examples) {
  std::vector<std::string> sentence{"the", "weather", "is", "mild"};
  auto kept = filter_candidates("weather",
                                {{"Weather", 0.95}, {"air", 0.93}, {"climate", 0.85},
                                 {"weathers", 0.97}, {"mild", 0.99}, {"[UNK]", 0.99},
                                 {"##er", 0.99}, {",", 0.99}, {"x", 0.99}, {"weather", 0.99},
                                 {"sky", 0.9}, {"fog", 0.96}},
                                sentence);
  std::vector<ScoredCandidate> want{{"fog", 0.96}, {"air", 0.93}};
  EXPECT_EQ(kept, want);
}

TEST(Filter, Reasons) {
  std::vector<std::string> s{"a", "lovely", "city"};
  EXPECT_TRUE(lexical_rejection("city", "cities", s).has_value());
  EXPECT_TRUE(lexical_rejection("box", "boxes", s).has_value());
  EXPECT_TRUE(lexical_rejection("city", "City", s).has_value());
  EXPECT_TRUE(lexical_rejection("city", "lovely", s).has_value());
  EXPECT_TRUE(lexical_rejection("city", "<unk>", s).has_value());
  EXPECT_FALSE(lexical_rejection("city", "town", s).has_value());
  EXPECT_TRUE(lexical_rejection("middag", "middagen", s, corpus::Language::kNl).has_value());
}

TEST(Filter, PropertyRetainedAboveThreshold) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ScoredCandidate> c;
    for (int k = 0; k < 15; ++k) c.push_back({"w" + std::to_string(k % 9), u(rng) * 0.2 + 0.85});
    auto kept = filter_candidates("target", c, {"target"});
    std::set<std::string> seen;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_GT(kept[i].sim, 0.9);
      EXPECT_TRUE(seen.insert(kept[i].token).second);
      if (i) {
        EXPECT_GE(kept[i - 1].sim, kept[i].sim);
      }
    }
  }
}

TEST(Compose, WeatherExample) {
  std::string text = "What will the weather be like this afternoon in Preston?";
  // Token positions: What0 will1 the2 weather3 be4 like5 this6 afternoon7 in8 Preston9 ?10
  TargetCandidates per{{3, {{"air", 0.95}}}, {7, {{"evening", 0.94}}}, {9, {{"Manchester", 0.93}}}};
  auto v = compose_variants(text, per);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].text, "What will the air be like this evening in Manchester?");
  EXPECT_EQ(v[0].rank, 1);
  EXPECT_NEAR(v[0].mean_sim, 0.94, 1e-12);
  EXPECT_EQ(v[0].substitutions.size(), 3u);
}

TEST(Compose, UnevenSurvivors) {
  std::string text = "the weather is mild";
  TargetCandidates per{{1, {{"air", 0.95}}}, {3, {{"calm", 0.99}, {"warm", 0.98}, {"soft", 0.97}}}};
  auto v = compose_variants(text, per);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].text, "the air is calm");
  EXPECT_EQ(v[1].text, "the weather is warm");
  EXPECT_EQ(v[2].text, "the weather is soft");
  EXPECT_EQ(v[2].rank, 3);
  EXPECT_EQ(v[2].substitutions.size(), 1u);
  EXPECT_TRUE(compose_variants(text, {}).empty());
}

TEST(Compose, PropertyBoundedDistinct) {
  std::mt19937_64 rng(4);
  std::string text = "a b c d e f";
  std::uniform_int_distribution<int> len(0, 30), word(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    TargetCandidates per;
    for (std::size_t t : {0u, 2u, 4u}) {
      std::vector<ScoredCandidate> list;
      int n = len(rng);
      for (int k = 0; k < n; ++k) list.push_back({"w" + std::to_string(word(rng)), 0.95});
      if (!list.empty()) per[t] = list;
    }
    auto v = compose_variants(text, per);
    EXPECT_LE(v.size(), kMaxVariants);
    std::set<std::string> texts;
    for (const auto& x : v) {
      EXPECT_NE(x.text, text);
      EXPECT_FALSE(x.substitutions.empty());
      EXPECT_GE(x.rank, 1);
      EXPECT_LE(x.rank, 20);
      EXPECT_TRUE(texts.insert(x.text).second);
    }
  }
}

Instance weather_instance() {
  Instance i;
  i.id = "w1";
  i.text = "What will the weather be like this afternoon in Preston?";
  i.mr = MR(std::vector<Slot>{{"timeOfDay", "afternoon"}, {"city", "Preston"}});
  i.spans = {{0, 35, 44}, {1, 48, 55}};
  i.pos = {"PRON", "AUX", "DET", "NOUN", "AUX", "ADP", "DET", "NOUN", "ADP", "PROPN", "PUNCT"};
  return i;
}

TEST(Propagate, CityFollowsSubstitution) {
  auto inst = weather_instance();
  corpus::validate_instance(inst);
  AugmentedVariant v;
  v.substitutions = {{3, "weather", "air", 0.95}, {9, "Preston", "Manchester", 0.93}};
  auto out = propagate_alignment(inst, v);
  EXPECT_EQ(out.text, "What will the air be like this afternoon in Manchester?");
  EXPECT_EQ(out.mr.slots()[1].value, "Manchester");
  EXPECT_EQ(out.mr.slots()[0].value, "afternoon");
  EXPECT_EQ(out.text.substr(out.spans[0].begin, out.spans[0].end - out.spans[0].begin), "afternoon");
  EXPECT_EQ(out.text.substr(out.spans[1].begin, out.spans[1].end - out.spans[1].begin), "Manchester");
}

TEST(Propagate, OutsideSpansLeavesMr) {
  auto inst = weather_instance();
  AugmentedVariant v;
  v.substitutions = {{3, "weather", "air", 0.95}};
  auto out = propagate_alignment(inst, v);
  EXPECT_EQ(out.mr, inst.mr);
  EXPECT_EQ(out.spans[1].begin, inst.spans[1].begin - 4);
}

TEST(Propagate, BadInputs) {
  auto inst = weather_instance();
  AugmentedVariant v;
  v.substitutions = {{3, "climate", "air", 0.95}};
  EXPECT_THROW(propagate_alignment(inst, v), InvalidArgument);
  inst.spans = {{0, 35, 44}, {1, 40, 55}};
  v.substitutions = {{3, "weather", "air", 0.95}};
  EXPECT_THROW(propagate_alignment(inst, v), ValidationError);
}

TEST(Propagate, PropertySpansStayExact) {
  auto corpus = corpus::read_canonical(kData / "restaurants.jsonl");
  std::mt19937_64 rng(11);
  const std::vector<std::string> words{"x", "Grand Hotel", "zz", "é", "longer-word", "A"};
  std::uniform_int_distribution<std::size_t> wpick(0, words.size() - 1);
  for (int trial = 0; trial < 400; ++trial) {
    const auto& inst = corpus.instances[static_cast<std::size_t>(trial) % corpus.instances.size()];
    auto toks = corpus::tokenize_with_offsets(inst.text);
    AugmentedVariant v;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (rng() % 3 == 0) v.substitutions.push_back({t, toks[t].text, words[wpick(rng)], 0.95});
    }
    Instance out;
    try {
      out = propagate_alignment(inst, v);
    } catch (const ValidationError&) {
      continue;  // a word-internal substitution inside a multi-token value
    }
    ASSERT_NO_THROW(corpus::validate_instance(out));
    for (const auto& s : out.spans) {
      auto covered = out.text.substr(s.begin, s.end - s.begin);
      EXPECT_EQ(covered, out.mr.slots()[s.slot_index].value);
    }
  }
}

TEST(AugmentInstance, MockWeather) {
  bridge::BridgeConfig cfg;
  auto client = bridge::connect(cfg);
  auto outcome = augment_instance(weather_instance(), *client);
  EXPECT_EQ(outcome.targets, 3u);
  for (const auto& v : outcome.variants) {
    for (const auto& s : v.substitutions) {
      EXPECT_GT(s.sim, 0.9);
      EXPECT_NE(s.replacement, "Weather");
      EXPECT_NE(s.replacement, "weathers");
    }
  }
}

class FailingChannel : public bridge::Channel {
 public:
  std::string roundtrip(const std::string&, std::chrono::milliseconds) override {
    throw BridgeError("adapter reply timed out");
  }
};

TEST(Tiered, CountsSplitsAndProvenance) {
  auto corpus = corpus::read_canonical(kData / "restaurants.jsonl");
  bridge::BridgeConfig cfg;
  auto factory = bridge::make_factory(cfg);
  std::size_t n = corpus.count(corpus::Split::kTrain);
  std::size_t prev = 0;
  for (auto tier : {Tier::kS, Tier::kM, Tier::kL, Tier::kXL}) {
    AugmentOptions o;
    o.tier = tier;
    auto r = tiered_augment(corpus, o, factory);
    EXPECT_LE(r.train_instances, (variants_per_instance(tier) + 1) * n);
    EXPECT_GE(r.train_instances, prev);
    prev = r.train_instances;
    EXPECT_EQ(r.corpus.count(corpus::Split::kDev), 1u);
    std::vector<Instance> test_before, test_after;
    for (const auto* i : corpus.in_split(corpus::Split::kTest)) test_before.push_back(*i);
    for (const auto* i : r.corpus.in_split(corpus::Split::kTest)) test_after.push_back(*i);
    EXPECT_EQ(test_before, test_after);
    for (const auto& i : r.corpus.instances) {
      if (!i.provenance) continue;
      EXPECT_EQ(i.provenance->method, "dataug");
      EXPECT_EQ(i.provenance->tier, std::string(to_string(tier)));
      EXPECT_NO_THROW(corpus::validate_instance(i));
    }
  }
}

TEST(Tiered, ThreadCountDoesNotChangeOutput) {
  auto corpus = corpus::read_canonical(kData / "restaurants.jsonl");
  auto factory = bridge::make_factory(bridge::BridgeConfig{});
  AugmentOptions o;
  o.tier = Tier::kXL;
  auto one = corpus::canonical_string(tiered_augment(corpus, o, factory).corpus);
  o.threads = 4;
  EXPECT_EQ(corpus::canonical_string(tiered_augment(corpus, o, factory).corpus), one);
}

TEST(Tiered, EmptyTrainFails) {
  corpus::Corpus c;
  EXPECT_THROW(tiered_augment(c, {}, bridge::make_factory(bridge::BridgeConfig{})), ValidationError);
}

TEST(Tiered, BridgeFailuresAreCounted) {
  auto corpus = corpus::read_canonical(kData / "restaurants.jsonl");
  bridge::BridgeFactory factory = [] {
    return std::make_unique<bridge::BridgeClient>(std::make_unique<FailingChannel>(),
                                                  bridge::BridgeConfig{});
  };
  auto r = tiered_augment(corpus, {}, factory);
  EXPECT_EQ(r.bridge_failures, 10u);
  EXPECT_EQ(r.train_instances, 10u);
  EXPECT_EQ(r.failure_messages.size(), 10u);
}

// Embeddings succeed, candidate requests time out.
class CandidateTimeoutChannel : public bridge::Channel {
 public:
  std::string roundtrip(const std::string& line, std::chrono::milliseconds) override {
    if (line.find("\"candidates\"") != std::string::npos) throw BridgeError("adapter reply timed out");
    return adapter_.handle_line(line);
  }

 private:
  bridge::MockAdapter adapter_;
};

TEST(Tiered, CandidateTimeoutSkipsTheTarget) {
  auto corpus = corpus::read_canonical(kData / "restaurants.jsonl");
  bridge::BridgeFactory factory = [] {
    return std::make_unique<bridge::BridgeClient>(std::make_unique<CandidateTimeoutChannel>(),
                                                  bridge::BridgeConfig{});
  };
  auto r = tiered_augment(corpus, {}, factory);
  EXPECT_EQ(r.bridge_failures, 0u);
  EXPECT_GT(r.skipped_targets, 0u);
  EXPECT_EQ(r.without_variants, 10u);
}

TEST(QaReport, IdenticalVariantsScoreFullBleu) {
  std::vector<QaPair> pairs{{"sports", corpus::Language::kEn, "Ajax won 2 - 1 .", "Ajax won 2 - 1 ."},
                            {"sports", corpus::Language::kEn, "PSV lost at home .", "PSV lost at home ."},
                            {"weather", corpus::Language::kEn, "It rains in Preston .", "It rains in Preston ."}};
  auto rows = augmentation_report(pairs, {});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].domain, "sports");
  EXPECT_EQ(rows[0].pairs, 2u);
  EXPECT_NEAR(rows[0].bleu, 100.0, 1e-9);
  EXPECT_NEAR(rows[1].bleu, 100.0, 1e-9);
  EXPECT_FALSE(rows[0].grammar_delta.has_value());
}

TEST(QaReport, EmbeddingScoreOfIdenticalTextsIsFull) {
  auto client = bridge::connect(bridge::BridgeConfig{});
  QaOptions o;
  o.bridge = client.get();
  auto rows = augmentation_report({{"d", corpus::Language::kEn, "a pub in town", "a pub in town"}}, o);
  ASSERT_TRUE(rows[0].embed_f1.has_value());
  EXPECT_NEAR(*rows[0].embed_f1, 100.0, 1e-9);
}

}  // namespace
