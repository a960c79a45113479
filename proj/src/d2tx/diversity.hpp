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

#ifndef D2TX_DIVERSITY_HPP_
#define D2TX_DIVERSITY_HPP_

#include <cstddef>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

#include "d2tx/corpus.hpp"

namespace d2tx::diversity {

using Tokens = std::vector<std::string>;

struct SurfaceStats {
  double asl = 0.0;
  double sdsl = 0.0;  // population SD
};

SurfaceStats surface_stats(const std::vector<Tokens>& sentences);

struct LexicalStats {
  std::size_t types = 0;
  double ttr1 = 0.0;
  double ttr2 = 0.0;
  std::vector<std::string> warnings;
};

// Tokens are case-folded. Segments run over the concatenation of all
// outputs in input order; the trailing partial segment is discarded.
LexicalStats lexical_stats(const std::vector<Tokens>& outputs, std::size_t segment = 100);

// Case-folded word vocabulary, punctuation excluded.
std::vector<std::string> vocabulary(const std::vector<Tokens>& texts);

struct NoveltyStats {
  double pct_novel = 0.0;  // fraction in [0,1]
  double coverage = 0.0;
  double novelty = 0.0;
};

NoveltyStats novelty_stats(const std::vector<std::string>& outputs,
                           const std::vector<std::string>& pool,
                           corpus::Language language = corpus::Language::kEn);

bool is_content_tag(std::string_view tag);

struct RecallPair {
  Tokens output;
  Tokens reference;
  std::vector<std::string> reference_tags;  // parallel to reference
};

double local_recall(const std::vector<RecallPair>& pairs);

struct DiversityReport {
  double asl = 0.0;
  double sdsl = 0.0;
  std::size_t types = 0;
  double ttr1 = 0.0;
  double ttr2 = 0.0;
  double pct_novel = 0.0;
  double coverage = 0.0;
  double novelty = 0.0;
  std::optional<double> local_recall;
  std::vector<std::string> warnings;
};

struct DiversityInput {
  std::vector<std::string> outputs;
  std::vector<std::string> pool;  // train + dev texts
  std::vector<RecallPair> recall_pairs;
  corpus::Language language = corpus::Language::kEn;
  std::size_t segment = 100;
};

DiversityReport diversity_report(const DiversityInput& input);

}  // namespace d2tx::diversity

#endif  // D2TX_DIVERSITY_HPP_
