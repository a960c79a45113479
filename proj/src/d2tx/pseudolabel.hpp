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

#ifndef D2TX_PSEUDOLABEL_HPP_
#define D2TX_PSEUDOLABEL_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "d2tx/augment.hpp"
#include "d2tx/bridge.hpp"
#include "d2tx/corpus.hpp"

namespace d2tx::pseudolabel {

// One sentence of an unpaired document.
struct SourceText {
  std::string document;
  std::string text;
};

struct LabeledItem {
  std::string document;
  std::string source_text;
  corpus::MR mr;
  std::vector<std::string> warnings;
};

struct LabeledBatch {
  std::string origin;
  std::vector<LabeledItem> items;
  std::vector<std::string> warnings;  // dropped texts and bridge failures
  std::size_t bridge_failures = 0;
};

struct LabelOptions {
  corpus::Language language = corpus::Language::kEn;
  corpus::MrShape shape = corpus::MrShape::kKeyValue;
  std::string origin;
  std::size_t threads = 1;
};

LabeledBatch label_texts(const std::vector<SourceText>& texts, const LabelOptions& options,
                         const bridge::BridgeFactory& bridge_factory);

struct LabelCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  LabelCounts& operator+=(const LabelCounts& other);
};

struct LabelScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MatchOptions {
  // Maximum edit distance between values; keys still match exactly.
  std::optional<std::size_t> value_tolerance;
};

std::size_t levenshtein(std::string_view a, std::string_view b);

LabelCounts label_counts(const std::vector<corpus::MR>& predicted,
                         const std::vector<corpus::MR>& gold, const MatchOptions& options = {});
LabelScore score(const LabelCounts& counts);
LabelScore eval_labels(const std::vector<corpus::MR>& predicted,
                       const std::vector<corpus::MR>& gold, const MatchOptions& options = {});

enum class ExtensionMode { kDocuments, kFraction };

std::size_t documents_for_tier(augment::Tier tier);  // 125, 250, 500, 1000
double fraction_for_tier(augment::Tier tier);        // 0.125, 0.25, 0.5, 1.0

struct ExtensionOptions {
  augment::Tier tier = augment::Tier::kS;
  ExtensionMode mode = ExtensionMode::kDocuments;
  // Overrides the document counts for S, M, L, XL.
  std::optional<std::array<std::size_t, 4>> tier_documents;
  bool split_train = true;
  std::string domain;  // defaults to the corpus domain
};

struct ExtensionResult {
  corpus::Corpus corpus;
  std::size_t added = 0;
  std::size_t documents_used = 0;
  std::size_t empty_excluded = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;
};

ExtensionResult assemble_extension(const corpus::Corpus& corpus, const LabeledBatch& labeled,
                                   const ExtensionOptions& options);

struct SplitResult {
  corpus::Corpus corpus;
  std::vector<std::string> warnings;
};

SplitResult split_train_sentences(const corpus::Corpus& corpus);

}  // namespace d2tx::pseudolabel

#endif  // D2TX_PSEUDOLABEL_HPP_
