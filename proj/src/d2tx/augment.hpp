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

#ifndef D2TX_AUGMENT_HPP_
#define D2TX_AUGMENT_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2tx/bridge.hpp"
#include "d2tx/corpus.hpp"

namespace d2tx::external {
class GrammarClient;
}

// Lexical-substitution augmentation: candidates from a masked model are
// re-ranked by attention-weighted contextual similarity, filtered, and
// filled into all target positions at once.
namespace d2tx::augment {

enum class Tier { kS, kM, kL, kXL };
std::size_t variants_per_instance(Tier tier);  // 1, 2, 5, 10
std::string_view to_string(Tier tier);
Tier parse_tier(std::string_view s);

inline constexpr std::size_t kMaxVariants = 20;
inline constexpr double kSimThreshold = 0.9;

// Nouns (incl. proper nouns), adjectives, adverbs and numerals.
bool is_target_tag(std::string_view tag);

struct TargetSelection {
  std::vector<std::size_t> indices;
  std::vector<std::string> pos_tags;  // parallel to indices
};

TargetSelection select_targets(const std::vector<std::string>& tokens,
                               const std::vector<std::string>& pos_tags);

// Cosine similarity; throws InvalidArgument on dimension mismatch or a zero
// vector.
double cosine(std::span<const double> a, std::span<const double> b);

// sum_i attention(i, t) * cos(h(D_i), h(D'_i)) with attention taken from the
// original document.
double sim_score(const bridge::EmbeddingView& original,
                 const bridge::EmbeddingView& substituted, std::size_t target_index);

struct ScoredCandidate {
  std::string token;
  double sim = 0.0;
  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

// Reason a candidate is rejected on lexical grounds (everything except the
// similarity threshold), or nullopt if it passes.
std::optional<std::string> lexical_rejection(std::string_view target,
                                             std::string_view candidate,
                                             const std::vector<std::string>& sentence_tokens,
                                             corpus::Language language = corpus::Language::kEn);

// Survivors ordered by descending sim (stable).
std::vector<ScoredCandidate> filter_candidates(
    std::string_view target_token, const std::vector<ScoredCandidate>& candidates,
    const std::vector<std::string>& sentence_tokens,
    corpus::Language language = corpus::Language::kEn, double threshold = kSimThreshold);

struct Substitution {
  std::size_t target_index = 0;
  std::string original;
  std::string replacement;
  double sim = 0.0;
  friend bool operator==(const Substitution&, const Substitution&) = default;
};

struct AugmentedVariant {
  std::string text;
  std::vector<Substitution> substitutions;
  int rank = 0;  // k of the k-th ranked fill, 1-based
  double mean_sim = 0.0;
};

using TargetCandidates = std::map<std::size_t, std::vector<ScoredCandidate>>;

// Variant k puts the k-th survivor at every target that has one. Variants
// equal to the original or to an earlier variant are dropped.
std::vector<AugmentedVariant> compose_variants(std::string_view text,
                                               const std::vector<corpus::Token>& tokens,
                                               const TargetCandidates& per_target,
                                               std::size_t max_variants = kMaxVariants);
std::vector<AugmentedVariant> compose_variants(std::string_view text,
                                               const TargetCandidates& per_target,
                                               std::size_t max_variants = kMaxVariants);

// Applies the variant's substitutions to the instance text, re-offsets
// spans and rewrites the slot values whose spans were touched.
corpus::Instance propagate_alignment(const corpus::Instance& instance,
                                     const AugmentedVariant& variant);

struct InstanceOutcome {
  std::vector<AugmentedVariant> variants;  // compose order
  std::size_t targets = 0;
  std::size_t candidates_scored = 0;
  std::vector<std::string> skipped_targets;  // bridge failures, one per target
};

// Runs the bridge side for one instance. Instances without POS tags have no
// targets.
InstanceOutcome augment_instance(const corpus::Instance& instance, bridge::BridgeClient& client,
                                 std::size_t max_variants = kMaxVariants,
                                 double threshold = kSimThreshold);

struct AugmentOptions {
  Tier tier = Tier::kS;
  std::size_t max_variants = kMaxVariants;
  double threshold = kSimThreshold;
  std::size_t threads = 1;
};

struct AugmentPair {
  std::size_t source_index = 0;  // into the input corpus
  std::size_t output_index = 0;  // into the output corpus
  AugmentedVariant variant;
};

struct AugmentResult {
  corpus::Corpus corpus;
  std::vector<AugmentPair> pairs;
  std::size_t train_instances = 0;
  std::size_t untagged = 0;
  std::size_t without_variants = 0;
  std::size_t bridge_failures = 0;
  std::size_t skipped_targets = 0;
  std::vector<std::string> failure_messages;
};

// Original instances plus, after each train instance, its top-tier variants
// ranked by mean similarity. Dev and test are passed through unchanged.
AugmentResult tiered_augment(const corpus::Corpus& corpus, const AugmentOptions& options,
                             const bridge::BridgeFactory& bridge_factory);

struct QaPair {
  std::string domain;
  corpus::Language language = corpus::Language::kEn;
  std::string original;
  std::string variant;
};

struct QaRow {
  std::string domain;
  std::size_t pairs = 0;
  double bleu = 0.0;
  std::optional<double> embed_f1;
  std::optional<double> grammar_delta;
  std::size_t grammar_skipped = 0;
};

struct QaOptions {
  bridge::BridgeClient* bridge = nullptr;
  // Rescaling constant for the embedding score; ignored for Dutch.
  std::optional<double> embed_baseline;
  external::GrammarClient* grammar = nullptr;
};

// One row per domain (in first-seen order): corpus BLEU of variants against
// their originals, optional embedding F1 and grammar-error delta.
std::vector<QaRow> augmentation_report(const std::vector<QaPair>& pairs, const QaOptions& options);

}  // namespace d2tx::augment

#endif  // D2TX_AUGMENT_HPP_
