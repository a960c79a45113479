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

#ifndef D2TX_QUALITY_HPP_
#define D2TX_QUALITY_HPP_

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2tx/bridge.hpp"
#include "d2tx/corpus.hpp"

// Reference-based output quality metrics, multi-reference aware.
namespace d2tx::quality {

using Tokens = std::vector<std::string>;

struct EvalPair {
  Tokens candidate;
  std::vector<Tokens> references;  // non-empty
};

// ---------------------------------------------------------------- BLEU

struct BleuOptions {
  std::size_t max_n = 4;
  bool add_one_smoothing = false;  // (m+1)/(t+1) for n >= 2
};

// Pooled sufficient statistics; adding the stats of shards gives exactly the
// stats of their union.
struct BleuStats {
  std::vector<std::size_t> matches;  // clipped, per order
  std::vector<std::size_t> totals;   // candidate n-grams, per order
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  // closest reference length, summed
  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const EvalPair& pair, std::size_t max_n = 4);
// Orders for which the corpus has no candidate n-grams are left out of the
// geometric mean; any other order with zero matches gives 0 unless smoothed.
double bleu_from_stats(const BleuStats& stats, const BleuOptions& options = {});
// Corpus BLEU on a 0..100 scale.
double bleu(std::span<const EvalPair> pairs, const BleuOptions& options = {});

// ---------------------------------------------------------------- NIST

// Information-weighted n-gram precision summed over orders 1..max_n, times
// the NIST brevity factor. Information values come from the pooled
// reference n-gram counts.
double nist(std::span<const EvalPair> pairs, std::size_t max_n = 5);

// -------------------------------------------------------------- METEOR

class Stemmer {
 public:
  virtual ~Stemmer() = default;
  virtual std::string stem(std::string_view word) const = 0;
};

// Porter (1980) for English, Snowball-style for Dutch.
std::unique_ptr<Stemmer> make_stemmer(corpus::Language language);

using SynonymProvider = std::function<bool(std::string_view, std::string_view)>;

struct MeteorOptions {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
  const Stemmer* stemmer = nullptr;  // stem stage skipped when null
  SynonymProvider synonyms;          // synonym stage skipped when empty
};

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Staged alignment: exact (case-folded), then stem, then synonym.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference,
                             const MeteorOptions& options);
double meteor_pair(const Tokens& candidate, const Tokens& reference,
                   const MeteorOptions& options);
// Mean over pairs of the best-reference score.
double meteor(std::span<const EvalPair> pairs, const MeteorOptions& options = {});

// ------------------------------------------------------------- ROUGE-L

std::size_t lcs_length(const Tokens& a, const Tokens& b);
double rouge_l_pair(const Tokens& candidate, const Tokens& reference);
double rouge_l(std::span<const EvalPair> pairs);

// ------------------------------------------------- embedding-based score

struct EmbedScore {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

using IdfWeights = std::map<std::string, double>;

// Greedy max-cosine matching over a candidate x reference similarity
// matrix. Weights default to 1.
EmbedScore greedy_match(const bridge::Matrix& similarity,
                        std::span<const double> candidate_weights = {},
                        std::span<const double> reference_weights = {});

struct EmbedOptions {
  const IdfWeights* idf = nullptr;
  std::optional<double> baseline;  // affine rescale (x - b) / (1 - b)
  corpus::Language language = corpus::Language::kEn;
};

// Mean over pairs of the best-reference (by F1) score. Baseline rescaling is
// never applied to Dutch.
EmbedScore embed_score(std::span<const EvalPair> pairs, bridge::BridgeClient& bridge,
                       const EmbedOptions& options = {});

}  // namespace d2tx::quality

#endif  // D2TX_QUALITY_HPP_
