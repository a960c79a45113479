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

#include "d2tx/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "d2tx/error.hpp"
#include "d2tx/external.hpp"
#include "d2tx/quality.hpp"
#include "d2tx/text.hpp"

namespace d2tx::augment {

using corpus::Instance;
using corpus::Token;

std::size_t variants_per_instance(Tier tier) {
  switch (tier) {
    case Tier::kS: return 1;
    case Tier::kM: return 2;
    case Tier::kL: return 5;
    case Tier::kXL: return 10;
  }
  return 1;
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::kS: return "S";
    case Tier::kM: return "M";
    case Tier::kL: return "L";
    case Tier::kXL: return "XL";
  }
  return "S";
}

Tier parse_tier(std::string_view s) {
  if (s == "S" || s == "s") return Tier::kS;
  if (s == "M" || s == "m") return Tier::kM;
  if (s == "L" || s == "l") return Tier::kL;
  if (s == "XL" || s == "xl") return Tier::kXL;
  throw InvalidArgument("unknown tier '" + std::string(s) + "' (expected S, M, L or XL)");
}

bool is_target_tag(std::string_view tag) {
  return tag == "NOUN" || tag == "PROPN" || tag == "ADJ" || tag == "ADV" || tag == "NUM";
}

TargetSelection select_targets(const std::vector<std::string>& tokens,
                               const std::vector<std::string>& pos_tags) {
  if (tokens.size() != pos_tags.size()) {
    throw InvalidArgument("POS tags (" + std::to_string(pos_tags.size()) +
                          ") are not parallel to tokens (" + std::to_string(tokens.size()) + ")");
  }
  TargetSelection sel;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_target_tag(pos_tags[i])) {
      sel.indices.push_back(i);
      sel.pos_tags.push_back(pos_tags[i]);
    }
  }
  return sel;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine undefined for a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double sim_score(const bridge::EmbeddingView& original,
                 const bridge::EmbeddingView& substituted, std::size_t target_index) {
  const std::size_t n = original.vectors.rows();
  if (substituted.vectors.rows() != n || original.attention.rows() != n ||
      original.attention.cols() != n) {
    throw InvalidArgument("embedding views differ in token count");
  }
  if (substituted.vectors.cols() != original.vectors.cols()) {
    throw InvalidArgument("embedding views differ in dimension");
  }
  if (target_index >= n) throw InvalidArgument("target index out of range");
  double sim = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sim += original.attention(i, target_index) *
           cosine(original.vectors.row(i), substituted.vectors.row(i));
  }
  return sim;
}

namespace {

bool is_unknown_marker(std::string_view t) {
  static const std::set<std::string, std::less<>> markers = {"[UNK]", "<unk>", "<UNK>", "UNK",
                                                             "[unk]", "<oov>"};
  return markers.count(t) > 0;
}

bool is_subword(std::string_view t) {
  return text::starts_with(t, "##") || text::ends_with(t, "@@") || text::starts_with(t, "@@");
}

bool is_plural_of(std::string_view target_lower, std::string_view cand_lower,
                  corpus::Language language) {
  std::string t(target_lower);
  std::vector<std::string> forms;
  if (language == corpus::Language::kEn) {
    forms = {t + "s", t + "es"};
    if (t.size() > 1 && t.back() == 'y') forms.push_back(t.substr(0, t.size() - 1) + "ies");
  } else {
    forms = {t + "s", t + "en", t + "n", t + "'s"};
  }
  return std::find(forms.begin(), forms.end(), cand_lower) != forms.end();
}

}  // namespace

std::optional<std::string> lexical_rejection(std::string_view target, std::string_view candidate,
                                             const std::vector<std::string>& sentence_tokens,
                                             corpus::Language language) {
  if (candidate.empty()) return "empty";
  for (char c : candidate) {
    if (text::is_space(c)) return "multi-word";
  }
  if (corpus::is_punctuation_token(candidate)) return "punctuation";
  if (text::codepoint_count(candidate) == 1) return "single character";
  if (is_unknown_marker(candidate)) return "unknown-token marker";
  if (is_subword(candidate)) return "subword fragment";
  auto cl = text::to_lower(candidate);
  auto tl = text::to_lower(target);
  if (cl == tl) return candidate == target ? "equal to target" : "capitalized version of target";
  if (is_plural_of(tl, cl, language)) return "plural of target";
  for (const auto& s : sentence_tokens) {
    if (text::to_lower(s) == cl) return "already in sentence";
  }
  return std::nullopt;
}

std::vector<ScoredCandidate> filter_candidates(std::string_view target_token,
                                               const std::vector<ScoredCandidate>& candidates,
                                               const std::vector<std::string>& sentence_tokens,
                                               corpus::Language language, double threshold) {
  std::vector<ScoredCandidate> out;
  std::set<std::string> seen;
  for (const auto& c : candidates) {
    if (!(c.sim > threshold)) continue;
    if (lexical_rejection(target_token, c.token, sentence_tokens, language)) continue;
    if (!seen.insert(c.token).second) continue;
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.sim > b.sim; });
  return out;
}

std::vector<AugmentedVariant> compose_variants(std::string_view text,
                                               const std::vector<Token>& tokens,
                                               const TargetCandidates& per_target,
                                               std::size_t max_variants) {
  std::vector<AugmentedVariant> out;
  std::set<std::string> seen{std::string(text)};
  for (std::size_t k = 1; k <= max_variants; ++k) {
    AugmentedVariant v;
    v.rank = static_cast<int>(k);
    for (const auto& [index, survivors] : per_target) {
      if (index >= tokens.size()) throw InvalidArgument("target index out of range");
      if (survivors.size() < k) continue;
      v.substitutions.push_back(
          {index, tokens[index].text, survivors[k - 1].token, survivors[k - 1].sim});
    }
    if (v.substitutions.empty()) break;
    std::string rebuilt;
    std::size_t cursor = 0;
    double sim_sum = 0.0;
    for (const auto& s : v.substitutions) {
      const auto& tok = tokens[s.target_index];
      rebuilt.append(text.substr(cursor, tok.begin - cursor));
      rebuilt.append(s.replacement);
      cursor = tok.end;
      sim_sum += s.sim;
    }
    rebuilt.append(text.substr(cursor));
    v.text = std::move(rebuilt);
    v.mean_sim = sim_sum / static_cast<double>(v.substitutions.size());
    if (!seen.insert(v.text).second) continue;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<AugmentedVariant> compose_variants(std::string_view text,
                                               const TargetCandidates& per_target,
                                               std::size_t max_variants) {
  return compose_variants(text, corpus::tokenize_with_offsets(text), per_target, max_variants);
}

Instance propagate_alignment(const Instance& instance, const AugmentedVariant& variant) {
  corpus::validate_instance(instance);
  auto tokens = corpus::tokenize_with_offsets(instance.text, instance.language);
  auto subs = variant.substitutions;
  std::sort(subs.begin(), subs.end(),
            [](const auto& a, const auto& b) { return a.target_index < b.target_index; });
  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (subs[k].target_index >= tokens.size()) {
      throw InvalidArgument("substitution target " + std::to_string(subs[k].target_index) +
                            " out of range");
    }
    if (k > 0 && subs[k].target_index == subs[k - 1].target_index) {
      throw InvalidArgument("two substitutions at the same target");
    }
    if (tokens[subs[k].target_index].text != subs[k].original) {
      throw InvalidArgument("substitution original '" + subs[k].original +
                            "' does not match token '" + tokens[subs[k].target_index].text + "'");
    }
  }

  std::string new_text;
  std::size_t cursor = 0;
  for (const auto& s : subs) {
    const auto& tok = tokens[s.target_index];
    new_text.append(instance.text, cursor, tok.begin - cursor);
    new_text.append(s.replacement);
    cursor = tok.end;
  }
  new_text.append(instance.text, cursor, std::string::npos);

  auto shift_until = [&](std::size_t pos) {
    long long d = 0;
    for (const auto& s : subs) {
      const auto& tok = tokens[s.target_index];
      if (tok.end <= pos) {
        d += static_cast<long long>(s.replacement.size()) -
             static_cast<long long>(tok.end - tok.begin);
      }
    }
    return d;
  };

  Instance out = instance;
  out.text = new_text;
  corpus::MR mr = instance.mr;
  for (std::size_t k = 0; k < instance.spans.size(); ++k) {
    const auto& span = instance.spans[k];
    bool touched = false;
    for (const auto& s : subs) {
      const auto& tok = tokens[s.target_index];
      bool straddles = (tok.begin < span.begin && span.begin < tok.end) ||
                       (tok.begin < span.end && span.end < tok.end);
      if (straddles) throw ValidationError("substituted token straddles a span boundary");
      if (tok.begin >= span.begin && tok.end <= span.end) touched = true;
    }
    auto& ns = out.spans[k];
    ns.begin = static_cast<std::size_t>(static_cast<long long>(span.begin) + shift_until(span.begin));
    ns.end = static_cast<std::size_t>(static_cast<long long>(span.end) + shift_until(span.end));
    if (!touched) continue;
    auto old_cover = text::collapse_whitespace(
        std::string_view(instance.text).substr(span.begin, span.end - span.begin));
    auto new_cover = text::collapse_whitespace(
        std::string_view(new_text).substr(ns.begin, ns.end - ns.begin));
    auto comps = mr.components(span.slot_index);
    std::size_t component = comps.size() == 2 ? 1 : 0;
    if (comps.size() == 3 && text::collapse_whitespace(comps[0]) != old_cover) component = 2;
    mr = mr.with_component(span.slot_index, component, new_cover);
  }
  out.mr = std::move(mr);
  // Tags stay valid only while the token count is unchanged.
  if (!out.pos.empty() && corpus::tokenize(out.text, out.language).size() != out.pos.size()) {
    out.pos.clear();
  }
  corpus::validate_instance(out);
  return out;
}

InstanceOutcome augment_instance(const Instance& instance, bridge::BridgeClient& client,
                                 std::size_t max_variants, double threshold) {
  InstanceOutcome outcome;
  if (instance.pos.empty()) return outcome;
  auto offsets = corpus::tokenize_with_offsets(instance.text, instance.language);
  std::vector<std::string> tokens;
  for (const auto& t : offsets) tokens.push_back(t.text);
  auto selection = select_targets(tokens, instance.pos);
  outcome.targets = selection.indices.size();
  if (selection.indices.empty()) return outcome;

  auto original = client.request_embedding(tokens);
  TargetCandidates per_target;
  for (auto t : selection.indices) {
    std::vector<ScoredCandidate> scored;
    try {
      auto raws = client.request_candidates(tokens, t);
      std::set<std::string> seen;
      for (const auto& raw : raws) {
        if (!seen.insert(raw.token).second) continue;
        if (lexical_rejection(tokens[t], raw.token, tokens, instance.language)) continue;
        auto substituted_tokens = tokens;
        substituted_tokens[t] = raw.token;
        auto substituted = client.request_embedding(substituted_tokens);
        scored.push_back({raw.token, sim_score(original, substituted, t)});
        ++outcome.candidates_scored;
      }
    } catch (const BridgeError& e) {
      outcome.skipped_targets.push_back("target " + std::to_string(t) + " ('" + tokens[t] +
                                        "'): " + e.what());
      continue;
    }
    auto survivors = filter_candidates(tokens[t], scored, tokens, instance.language, threshold);
    if (!survivors.empty()) per_target.emplace(t, std::move(survivors));
  }
  outcome.variants = compose_variants(instance.text, offsets, per_target, max_variants);
  return outcome;
}

AugmentResult tiered_augment(const corpus::Corpus& corpus, const AugmentOptions& options,
                             const bridge::BridgeFactory& bridge_factory) {
  auto train = corpus.in_split(corpus::Split::kTrain);
  if (train.empty()) throw ValidationError("train split is empty");

  struct Slot {
    std::vector<Instance> variants;
    std::vector<AugmentedVariant> raw;
    bool untagged = false;
    bool failed = false;
    std::string message;
    std::vector<std::string> skipped;
  };
  std::vector<Slot> results(corpus.instances.size());
  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    if (corpus.instances[i].split == corpus::Split::kTrain) work.push_back(i);
  }

  const std::size_t keep = variants_per_instance(options.tier);
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    try {
      auto client = bridge_factory();
      while (true) {
        std::size_t w = next.fetch_add(1);
        if (w >= work.size()) break;
        std::size_t idx = work[w];
        const auto& inst = corpus.instances[idx];
        auto& slot = results[idx];
        if (inst.pos.empty()) {
          slot.untagged = true;
          continue;
        }
        try {
          auto outcome = augment_instance(inst, *client, options.max_variants, options.threshold);
          for (const auto& m : outcome.skipped_targets) {
            slot.skipped.push_back("instance '" + inst.id + "': " + m);
          }
          auto variants = std::move(outcome.variants);
          std::stable_sort(variants.begin(), variants.end(),
                           [](const AugmentedVariant& a, const AugmentedVariant& b) {
                             return a.mean_sim > b.mean_sim;
                           });
          if (variants.size() > keep) variants.resize(keep);
          for (const auto& v : variants) {
            auto aug = propagate_alignment(inst, v);
            aug.id = inst.id + "-aug" + std::to_string(v.rank);
            aug.provenance = corpus::Provenance{"dataug", std::string(to_string(options.tier)),
                                                v.rank, ""};
            slot.variants.push_back(std::move(aug));
            slot.raw.push_back(v);
          }
        } catch (const Error& e) {
          slot.failed = true;
          slot.message = "instance '" + inst.id + "': " + e.what();
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
    }
  };

  std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, work.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  AugmentResult result;
  result.corpus.name = corpus.name;
  result.corpus.domain = corpus.domain;
  result.corpus.language = corpus.language;
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    result.corpus.instances.push_back(corpus.instances[i]);
    auto& slot = results[i];
    if (corpus.instances[i].split != corpus::Split::kTrain) continue;
    if (slot.untagged) ++result.untagged;
    result.skipped_targets += slot.skipped.size();
    for (auto& m : slot.skipped) result.failure_messages.push_back(std::move(m));
    if (slot.failed) {
      ++result.bridge_failures;
      result.failure_messages.push_back(slot.message);
    }
    if (!slot.failed && !slot.untagged && slot.variants.empty()) ++result.without_variants;
    for (std::size_t k = 0; k < slot.variants.size(); ++k) {
      result.pairs.push_back({i, result.corpus.instances.size(), slot.raw[k]});
      result.corpus.instances.push_back(std::move(slot.variants[k]));
    }
  }
  result.train_instances = result.corpus.count(corpus::Split::kTrain);
  return result;
}

std::vector<QaRow> augmentation_report(const std::vector<QaPair>& pairs, const QaOptions& options) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const QaPair*>> by_domain;
  for (const auto& p : pairs) {
    if (!by_domain.count(p.domain)) order.push_back(p.domain);
    by_domain[p.domain].push_back(&p);
  }
  std::vector<QaRow> rows;
  for (const auto& domain : order) {
    const auto& members = by_domain[domain];
    QaRow row;
    row.domain = domain;
    row.pairs = members.size();
    std::vector<quality::EvalPair> eval;
    std::vector<std::string> originals, variants;
    for (const auto* p : members) {
      eval.push_back({corpus::tokenize(p->variant, p->language),
                      {corpus::tokenize(p->original, p->language)}});
      originals.push_back(p->original);
      variants.push_back(p->variant);
    }
    auto language = members.front()->language;
    row.bleu = quality::bleu(eval);
    if (options.bridge) {
      quality::EmbedOptions eo;
      eo.baseline = options.embed_baseline;
      eo.language = language;
      row.embed_f1 = 100.0 * quality::embed_score(eval, *options.bridge, eo).f1;
    }
    if (options.grammar) {
      auto delta = external::grammar_delta(originals, variants, language, *options.grammar);
      row.grammar_delta = delta.mean;
      row.grammar_skipped = delta.skipped.size();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace d2tx::augment
