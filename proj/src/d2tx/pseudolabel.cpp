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

#include "d2tx/pseudolabel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "d2tx/datalang.hpp"
#include "d2tx/error.hpp"
#include "d2tx/external.hpp"
#include "d2tx/text.hpp"

namespace d2tx::pseudolabel {

using corpus::Instance;
using corpus::MR;

LabeledBatch label_texts(const std::vector<SourceText>& texts, const LabelOptions& options,
                         const bridge::BridgeFactory& bridge_factory) {
  LabeledBatch batch;
  batch.origin = options.origin;
  if (texts.empty()) return batch;

  struct Outcome {
    std::optional<LabeledItem> item;
    std::vector<std::string> warnings;
    bool bridge_failed = false;
  };
  std::vector<Outcome> outcomes(texts.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    try {
      auto client = bridge_factory();
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= texts.size()) break;
        auto& out = outcomes[i];
        const auto& src = texts[i];
        std::string reply;
        try {
          reply = client->request_translation(
              datalang::make_labeling_prompt(options.language, src.text));
        } catch (const Error& e) {
          out.bridge_failed = true;
          out.warnings.push_back("text " + std::to_string(i) + ": " + e.what());
          continue;
        }
        try {
          auto report = datalang::parse_datalang(reply, options.shape);
          LabeledItem item{src.document, src.text, report.mr, {}};
          for (const auto& w : report.warnings) {
            item.warnings.push_back("field " + std::to_string(w.field_index) + " '" + w.field +
                                    "': " + w.message);
          }
          out.item = std::move(item);
        } catch (const Error& e) {
          out.warnings.push_back("text " + std::to_string(i) + ": unparseable label '" + reply +
                                 "' (" + e.what() + ")");
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
    }
  };

  std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, texts.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  for (auto& o : outcomes) {
    if (o.bridge_failed) ++batch.bridge_failures;
    for (auto& w : o.warnings) batch.warnings.push_back(std::move(w));
    if (o.item) batch.items.push_back(std::move(*o.item));
  }
  if (batch.bridge_failures == texts.size()) {
    throw BridgeError("labeling failed for every text; first failure: " + batch.warnings.front());
  }
  return batch;
}

LabelCounts& LabelCounts::operator+=(const LabelCounts& other) {
  matched += other.matched;
  predicted += other.predicted;
  gold += other.gold;
  return *this;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

std::vector<std::vector<std::string>> normalized_fields(const MR& mr) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < mr.size(); ++i) {
    auto comps = mr.components(i);
    for (auto& c : comps) c = corpus::normalize_key(c);
    out.push_back(std::move(comps));
  }
  return out;
}

bool fields_match(const std::vector<std::string>& p, const std::vector<std::string>& g,
                  const MatchOptions& options) {
  if (p.size() != g.size()) return false;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    if (p[k] != g[k]) return false;
  }
  if (options.value_tolerance) return levenshtein(p.back(), g.back()) <= *options.value_tolerance;
  return p.back() == g.back();
}

}  // namespace

LabelCounts label_counts(const std::vector<MR>& predicted, const std::vector<MR>& gold,
                         const MatchOptions& options) {
  if (predicted.size() != gold.size()) {
    throw InvalidArgument("predicted (" + std::to_string(predicted.size()) + ") and gold (" +
                          std::to_string(gold.size()) + ") label lists differ in length");
  }
  LabelCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto p = normalized_fields(predicted[i]);
    auto g = normalized_fields(gold[i]);
    c.predicted += p.size();
    c.gold += g.size();
    std::vector<bool> used(g.size(), false);
    for (const auto& pf : p) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (!used[j] && fields_match(pf, g[j], options)) {
          used[j] = true;
          ++c.matched;
          break;
        }
      }
    }
  }
  return c;
}

LabelScore score(const LabelCounts& counts) {
  LabelScore s;
  s.precision = counts.predicted ? static_cast<double>(counts.matched) /
                                       static_cast<double>(counts.predicted)
                                 : 0.0;
  s.recall =
      counts.gold ? static_cast<double>(counts.matched) / static_cast<double>(counts.gold) : 0.0;
  s.f1 = s.precision + s.recall > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

LabelScore eval_labels(const std::vector<MR>& predicted, const std::vector<MR>& gold,
                       const MatchOptions& options) {
  return score(label_counts(predicted, gold, options));
}

std::size_t documents_for_tier(augment::Tier tier) {
  switch (tier) {
    case augment::Tier::kS: return 125;
    case augment::Tier::kM: return 250;
    case augment::Tier::kL: return 500;
    case augment::Tier::kXL: return 1000;
  }
  return 125;
}

double fraction_for_tier(augment::Tier tier) {
  switch (tier) {
    case augment::Tier::kS: return 0.125;
    case augment::Tier::kM: return 0.25;
    case augment::Tier::kL: return 0.5;
    case augment::Tier::kXL: return 1.0;
  }
  return 0.125;
}

SplitResult split_train_sentences(const corpus::Corpus& corpus) {
  SplitResult result;
  result.corpus.name = corpus.name;
  result.corpus.domain = corpus.domain;
  result.corpus.language = corpus.language;
  for (const auto& inst : corpus.instances) {
    if (inst.split != corpus::Split::kTrain) {
      result.corpus.instances.push_back(inst);
      continue;
    }
    auto sentences = external::split_sentences(inst.text, inst.language);
    if (sentences.size() <= 1) {
      result.corpus.instances.push_back(inst);
      continue;
    }
    // Locate each sentence in the original text.
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t cursor = 0;
    for (const auto& s : sentences) {
      auto at = inst.text.find(s, cursor);
      if (at == std::string::npos) throw RuntimeError("sentence not found in source text");
      ranges.emplace_back(at, at + s.size());
      cursor = at + s.size();
    }

    std::vector<Instance> pieces;
    if (inst.spans.empty()) {
      result.warnings.push_back("instance '" + inst.id +
                                "' has no alignment spans; each sentence keeps the full MR");
      for (std::size_t k = 0; k < sentences.size(); ++k) {
        Instance piece = inst;
        piece.id = inst.id + "-s" + std::to_string(k + 1);
        piece.text = sentences[k];
        pieces.push_back(std::move(piece));
      }
    } else {
      std::vector<std::size_t> owner(inst.mr.size(), sentences.size());
      for (const auto& sp : inst.spans) {
        for (std::size_t k = 0; k < ranges.size(); ++k) {
          if (sp.begin >= ranges[k].first && sp.begin < ranges[k].second) {
            if (owner[sp.slot_index] == sentences.size()) owner[sp.slot_index] = k;
            break;
          }
        }
      }
      bool ok = true;
      for (std::size_t k = 0; k < sentences.size() && ok; ++k) {
        std::vector<std::size_t> fields;
        for (std::size_t f = 0; f < owner.size(); ++f) {
          if (owner[f] == k) fields.push_back(f);
        }
        if (fields.empty()) {
          ok = false;
          break;
        }
        Instance piece = inst;
        piece.id = inst.id + "-s" + std::to_string(k + 1);
        piece.text = sentences[k];
        piece.mr = inst.mr.subset(fields);
        piece.spans.clear();
        for (const auto& sp : inst.spans) {
          auto it = std::find(fields.begin(), fields.end(), sp.slot_index);
          if (it == fields.end()) continue;
          if (sp.begin < ranges[k].first || sp.end > ranges[k].second) {
            ok = false;
            break;
          }
          piece.spans.push_back({static_cast<std::size_t>(it - fields.begin()),
                                 sp.begin - ranges[k].first, sp.end - ranges[k].first});
        }
        pieces.push_back(std::move(piece));
      }
      std::size_t unaligned = static_cast<std::size_t>(
          std::count(owner.begin(), owner.end(), sentences.size()));
      if (!ok || unaligned > 0) {
        result.warnings.push_back("instance '" + inst.id +
                                  "' cannot be partitioned by its spans; kept unsplit");
        result.corpus.instances.push_back(inst);
        continue;
      }
    }
    // Keep POS tags only when the sentence tokens partition the original ones.
    if (!inst.pos.empty()) {
      auto offsets = corpus::tokenize_with_offsets(inst.text, inst.language);
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        std::vector<std::string> tags;
        for (std::size_t t = 0; t < offsets.size(); ++t) {
          if (offsets[t].begin >= ranges[k].first && offsets[t].end <= ranges[k].second) {
            tags.push_back(inst.pos[t]);
          }
        }
        if (corpus::tokenize(pieces[k].text, inst.language).size() == tags.size()) {
          pieces[k].pos = std::move(tags);
        } else {
          pieces[k].pos.clear();
        }
      }
    }
    for (auto& p : pieces) {
      corpus::validate_instance(p);
      result.corpus.instances.push_back(std::move(p));
    }
  }
  return result;
}

ExtensionResult assemble_extension(const corpus::Corpus& corpus, const LabeledBatch& labeled,
                                   const ExtensionOptions& options) {
  ExtensionResult result;
  if (options.split_train) {
    auto split = split_train_sentences(corpus);
    result.corpus = std::move(split.corpus);
    result.warnings = std::move(split.warnings);
  } else {
    result.corpus = corpus;
  }
  if (labeled.items.empty()) {
    result.warnings.push_back("labeled batch is empty; corpus unchanged");
    return result;
  }

  std::vector<const LabeledItem*> selected;
  if (options.mode == ExtensionMode::kFraction) {
    auto n = static_cast<std::size_t>(
        std::floor(static_cast<double>(labeled.items.size()) * fraction_for_tier(options.tier)));
    for (std::size_t i = 0; i < n; ++i) selected.push_back(&labeled.items[i]);
    std::set<std::string> docs;
    for (const auto* it : selected) docs.insert(it->document);
    result.documents_used = docs.size();
  } else {
    std::size_t want = documents_for_tier(options.tier);
    if (options.tier_documents) {
      want = (*options.tier_documents)[static_cast<std::size_t>(options.tier)];
    }
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const auto& it : labeled.items) {
      if (seen.insert(it.document).second) order.push_back(it.document);
    }
    if (order.size() < want) {
      result.warnings.push_back("tier " + std::string(augment::to_string(options.tier)) +
                                " needs " + std::to_string(want) + " documents but only " +
                                std::to_string(order.size()) + " are available; using all");
      want = order.size();
    }
    std::set<std::string> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
    for (const auto& it : labeled.items) {
      if (chosen.count(it.document)) selected.push_back(&it);
    }
    result.documents_used = want;
  }

  std::set<std::string> existing;
  for (const auto& inst : result.corpus.instances) {
    if (inst.split == corpus::Split::kTrain) existing.insert(text::collapse_whitespace(inst.text));
  }
  std::string domain = options.domain.empty() ? corpus.domain : options.domain;
  std::size_t serial = 0;
  for (const auto* it : selected) {
    if (it->mr.empty()) {
      ++result.empty_excluded;
      continue;
    }
    Instance inst;
    inst.id = "pl-" + std::to_string(++serial);
    inst.mr = it->mr;
    inst.text = it->source_text;
    inst.language = corpus.language;
    inst.domain = domain;
    inst.split = corpus::Split::kTrain;
    inst.provenance =
        corpus::Provenance{"pseulab", std::string(augment::to_string(options.tier)), 0,
                           labeled.origin};
    if (!existing.insert(text::collapse_whitespace(inst.text)).second) ++result.duplicates;
    result.corpus.instances.push_back(std::move(inst));
    ++result.added;
  }
  if (result.empty_excluded > 0) {
    result.warnings.push_back(std::to_string(result.empty_excluded) +
                              " labeled items with empty MRs were excluded");
  }
  if (result.duplicates > 0) {
    result.warnings.push_back(std::to_string(result.duplicates) +
                              " added texts duplicate existing training texts");
  }
  return result;
}

}  // namespace d2tx::pseudolabel
