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

#include "d2tx/diversity.hpp"

#include <cmath>
#include <set>

#include "d2tx/error.hpp"
#include "d2tx/external.hpp"
#include "d2tx/text.hpp"

namespace d2tx::diversity {

SurfaceStats surface_stats(const std::vector<Tokens>& sentences) {
  if (sentences.empty()) throw InvalidArgument("surface_stats: no sentences");
  double n = static_cast<double>(sentences.size());
  double sum = 0.0;
  for (const auto& s : sentences) sum += static_cast<double>(s.size());
  SurfaceStats st;
  st.asl = sum / n;
  double var = 0.0;
  for (const auto& s : sentences) {
    double d = static_cast<double>(s.size()) - st.asl;
    var += d * d;
  }
  st.sdsl = std::sqrt(var / n);
  return st;
}

namespace {

double segmented_ttr(const std::vector<std::string>& items, std::size_t segment,
                     const char* what, std::vector<std::string>& warnings) {
  if (items.empty()) return 0.0;
  if (items.size() < segment) {
    warnings.push_back(std::string(what) + ": only " + std::to_string(items.size()) +
                       " tokens, fewer than the segment size " + std::to_string(segment) +
                       "; using one truncated segment");
    std::set<std::string> types(items.begin(), items.end());
    return static_cast<double>(types.size()) / static_cast<double>(items.size());
  }
  std::size_t segments = items.size() / segment;
  double sum = 0.0;
  for (std::size_t s = 0; s < segments; ++s) {
    auto first = items.begin() + static_cast<std::ptrdiff_t>(s * segment);
    std::set<std::string> types(first, first + static_cast<std::ptrdiff_t>(segment));
    sum += static_cast<double>(types.size()) / static_cast<double>(segment);
  }
  return sum / static_cast<double>(segments);
}

}  // namespace

LexicalStats lexical_stats(const std::vector<Tokens>& outputs, std::size_t segment) {
  if (outputs.empty()) throw InvalidArgument("lexical_stats: no outputs");
  if (segment == 0) throw InvalidArgument("lexical_stats: segment size must be positive");
  std::vector<std::string> unigrams, bigrams;
  for (const auto& out : outputs) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      unigrams.push_back(text::to_lower(out[i]));
      if (i > 0) bigrams.push_back(unigrams[unigrams.size() - 2] + " " + unigrams.back());
    }
  }
  LexicalStats st;
  st.types = std::set<std::string>(unigrams.begin(), unigrams.end()).size();
  st.ttr1 = segmented_ttr(unigrams, segment, "TTR1", st.warnings);
  st.ttr2 = segmented_ttr(bigrams, segment, "TTR2", st.warnings);
  return st;
}

std::vector<std::string> vocabulary(const std::vector<Tokens>& texts) {
  std::set<std::string> v;
  for (const auto& t : texts) {
    for (const auto& tok : t) {
      if (!corpus::is_punctuation_token(tok)) v.insert(text::to_lower(tok));
    }
  }
  return {v.begin(), v.end()};
}

NoveltyStats novelty_stats(const std::vector<std::string>& outputs,
                           const std::vector<std::string>& pool, corpus::Language language) {
  if (outputs.empty()) throw InvalidArgument("novelty_stats: no outputs");
  if (pool.empty()) throw InvalidArgument("novelty_stats: reference pool is empty");
  std::set<std::string> pool_texts;
  std::vector<Tokens> pool_tokens, out_tokens;
  for (const auto& p : pool) {
    pool_texts.insert(text::collapse_whitespace(p));
    pool_tokens.push_back(corpus::tokenize(p, language));
  }
  std::size_t novel = 0;
  for (const auto& o : outputs) {
    if (!pool_texts.count(text::collapse_whitespace(o))) ++novel;
    out_tokens.push_back(corpus::tokenize(o, language));
  }
  auto vp = vocabulary(pool_tokens);
  auto vo = vocabulary(out_tokens);
  std::set<std::string> pool_set(vp.begin(), vp.end());
  std::size_t shared = 0;
  for (const auto& w : vo) shared += pool_set.count(w);

  NoveltyStats st;
  st.pct_novel = static_cast<double>(novel) / static_cast<double>(outputs.size());
  st.coverage = vp.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(vp.size());
  st.novelty =
      vo.empty() ? 0.0 : static_cast<double>(vo.size() - shared) / static_cast<double>(vo.size());
  return st;
}

bool is_content_tag(std::string_view tag) {
  return tag == "NOUN" || tag == "PROPN" || tag == "VERB" || tag == "ADJ" || tag == "ADV";
}

double local_recall(const std::vector<RecallPair>& pairs) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& p : pairs) {
    if (p.reference.size() != p.reference_tags.size()) {
      throw InvalidArgument("reference tags are not parallel to reference tokens");
    }
    std::set<std::string> content;
    for (std::size_t i = 0; i < p.reference.size(); ++i) {
      if (is_content_tag(p.reference_tags[i])) content.insert(text::to_lower(p.reference[i]));
    }
    if (content.empty()) continue;
    std::set<std::string> out;
    for (const auto& t : p.output) out.insert(text::to_lower(t));
    std::size_t hit = 0;
    for (const auto& c : content) hit += out.count(c);
    sum += static_cast<double>(hit) / static_cast<double>(content.size());
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

DiversityReport diversity_report(const DiversityInput& input) {
  if (input.outputs.empty()) throw InvalidArgument("diversity: no outputs");
  std::vector<Tokens> sentences, outputs;
  for (const auto& o : input.outputs) {
    outputs.push_back(corpus::tokenize(o, input.language));
    for (const auto& s : external::split_sentences(o, input.language)) {
      sentences.push_back(corpus::tokenize(s, input.language));
    }
  }
  if (sentences.empty()) throw InvalidArgument("diversity: outputs contain no sentences");
  DiversityReport r;
  auto surface = surface_stats(sentences);
  r.asl = surface.asl;
  r.sdsl = surface.sdsl;
  auto lex = lexical_stats(outputs, input.segment);
  r.types = lex.types;
  r.ttr1 = lex.ttr1;
  r.ttr2 = lex.ttr2;
  r.warnings = lex.warnings;
  auto nov = novelty_stats(input.outputs, input.pool, input.language);
  r.pct_novel = nov.pct_novel;
  r.coverage = nov.coverage;
  r.novelty = nov.novelty;
  if (!input.recall_pairs.empty()) r.local_recall = local_recall(input.recall_pairs);
  return r;
}

}  // namespace d2tx::diversity
