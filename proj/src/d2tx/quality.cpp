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

#include "d2tx/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "d2tx/augment.hpp"
#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::quality {

namespace {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (n == 0 || tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

NgramCounts max_reference_counts(const std::vector<Tokens>& refs, std::size_t n) {
  NgramCounts out;
  for (const auto& r : refs) {
    for (const auto& [g, c] : count_ngrams(r, n)) out[g] = std::max(out[g], c);
  }
  return out;
}

void require_pairs(std::span<const EvalPair> pairs, const char* metric) {
  if (pairs.empty()) throw InvalidArgument(std::string(metric) + ": no evaluation pairs");
  for (const auto& p : pairs) {
    if (p.references.empty()) {
      throw InvalidArgument(std::string(metric) + ": pair without references");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// BLEU

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  if (matches.size() < other.matches.size()) {
    matches.resize(other.matches.size(), 0);
    totals.resize(other.totals.size(), 0);
  }
  for (std::size_t i = 0; i < other.matches.size(); ++i) {
    matches[i] += other.matches[i];
    totals[i] += other.totals[i];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const EvalPair& pair, std::size_t max_n) {
  if (pair.references.empty()) throw InvalidArgument("bleu: pair without references");
  BleuStats s;
  s.matches.assign(max_n, 0);
  s.totals.assign(max_n, 0);
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto cand = count_ngrams(pair.candidate, n);
    auto refmax = max_reference_counts(pair.references, n);
    for (const auto& [g, c] : cand) {
      s.totals[n - 1] += c;
      auto it = refmax.find(g);
      if (it != refmax.end()) s.matches[n - 1] += std::min(c, it->second);
    }
  }
  s.candidate_length = pair.candidate.size();
  // Closest reference length; ties go to the shorter reference.
  std::size_t best = pair.references.front().size();
  for (const auto& r : pair.references) {
    auto d = [&](std::size_t len) {
      return len > s.candidate_length ? len - s.candidate_length : s.candidate_length - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  s.reference_length = best;
  return s;
}

double bleu_from_stats(const BleuStats& stats, const BleuOptions& options) {
  if (stats.candidate_length == 0) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t i = 0; i < stats.totals.size() && i < options.max_n; ++i) {
    if (stats.totals[i] == 0) continue;
    double m = static_cast<double>(stats.matches[i]);
    double t = static_cast<double>(stats.totals[i]);
    if (options.add_one_smoothing && i > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_sum += std::log(m / t);
    ++orders;
  }
  if (orders == 0) return 0.0;
  double c = static_cast<double>(stats.candidate_length);
  double r = static_cast<double>(stats.reference_length);
  double bp = std::exp(std::min(0.0, 1.0 - r / c));
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(orders));
}

double bleu(std::span<const EvalPair> pairs, const BleuOptions& options) {
  require_pairs(pairs, "bleu");
  BleuStats total;
  total.matches.assign(options.max_n, 0);
  total.totals.assign(options.max_n, 0);
  for (const auto& p : pairs) total += bleu_stats(p, options.max_n);
  return bleu_from_stats(total, options);
}

// ---------------------------------------------------------------------------
// NIST

double nist(std::span<const EvalPair> pairs, std::size_t max_n) {
  require_pairs(pairs, "nist");
  std::vector<NgramCounts> ref_counts(max_n + 1);
  std::size_t ref_words = 0;
  double ref_length = 0.0;
  std::size_t sys_length = 0;
  for (const auto& p : pairs) {
    // A repeated reference carries no new information.
    std::set<Tokens> distinct(p.references.begin(), p.references.end());
    double len_sum = 0.0;
    for (const auto& r : distinct) {
      ref_words += r.size();
      len_sum += static_cast<double>(r.size());
      for (std::size_t n = 1; n <= max_n; ++n) {
        for (const auto& [g, c] : count_ngrams(r, n)) ref_counts[n][g] += c;
      }
    }
    ref_length += len_sum / static_cast<double>(distinct.size());
    sys_length += p.candidate.size();
  }
  if (sys_length == 0) throw InvalidArgument("nist: all candidates are empty");

  auto info = [&](const Ngram& g) {
    std::size_t n = g.size();
    double count = static_cast<double>(ref_counts[n].at(g));
    double prefix = n == 1 ? static_cast<double>(ref_words)
                           : static_cast<double>(ref_counts[n - 1].at(Ngram(g.begin(), g.end() - 1)));
    return std::log2(prefix / count);
  };

  double score = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    double info_sum = 0.0;
    std::size_t cand_total = 0;
    for (const auto& p : pairs) {
      auto cand = count_ngrams(p.candidate, n);
      auto refmax = max_reference_counts(p.references, n);
      for (const auto& [g, c] : cand) {
        cand_total += c;
        auto it = refmax.find(g);
        if (it == refmax.end()) continue;
        info_sum += static_cast<double>(std::min(c, it->second)) * info(g);
      }
    }
    if (cand_total > 0) score += info_sum / static_cast<double>(cand_total);
  }
  const double beta = std::log(0.5) / std::pow(std::log(1.5), 2);
  double ratio = ref_length > 0 ? std::min(1.0, static_cast<double>(sys_length) / ref_length) : 1.0;
  double brevity = ratio > 0 ? std::exp(beta * std::pow(std::log(ratio), 2)) : 0.0;
  return score * brevity;
}

// ---------------------------------------------------------------------------
// Stemmers

namespace {

// Porter (1980) suffix stripping for English.
class PorterStemmer final : public Stemmer {
 public:
  std::string stem(std::string_view word) const override {
    std::string w = text::to_lower(word);
    if (w.size() <= 2) return w;
    for (char c : w) {
      if (static_cast<unsigned char>(c) >= 0x80) return w;
    }
    step1ab(w);
    step1c(w);
    step2(w);
    step3(w);
    step4(w);
    step5(w);
    return w;
  }

 private:
  static bool cons(const std::string& w, std::size_t i) {
    switch (w[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(w, i - 1);
      default: return true;
    }
  }
  // Number of VC sequences in w[0, end).
  static int measure(const std::string& w, std::size_t end) {
    int n = 0;
    std::size_t i = 0;
    while (i < end && cons(w, i)) ++i;
    while (i < end) {
      while (i < end && !cons(w, i)) ++i;
      if (i >= end) break;
      while (i < end && cons(w, i)) ++i;
      ++n;
    }
    return n;
  }
  static bool has_vowel(const std::string& w, std::size_t end) {
    for (std::size_t i = 0; i < end; ++i) {
      if (!cons(w, i)) return true;
    }
    return false;
  }
  static bool double_cons(const std::string& w, std::size_t end) {
    return end >= 2 && w[end - 1] == w[end - 2] && cons(w, end - 1);
  }
  static bool cvc(const std::string& w, std::size_t end) {
    if (end < 3) return false;
    std::size_t i = end - 1;
    if (!cons(w, i) || cons(w, i - 1) || !cons(w, i - 2)) return false;
    char c = w[i];
    return c != 'w' && c != 'x' && c != 'y';
  }
  static bool ends(const std::string& w, std::string_view s) { return text::ends_with(w, s); }
  static std::size_t stem_len(const std::string& w, std::string_view s) { return w.size() - s.size(); }

  // Replace suffix s by r when the remaining stem has measure > min_m.
  static bool replace_if(std::string& w, std::string_view s, std::string_view r, int min_m) {
    if (!ends(w, s)) return false;
    std::size_t k = stem_len(w, s);
    if (measure(w, k) > min_m) w = w.substr(0, k) + std::string(r);
    return true;
  }

  static void step1ab(std::string& w) {
    if (ends(w, "sses")) {
      w.resize(w.size() - 2);
    } else if (ends(w, "ies")) {
      w.resize(w.size() - 2);
    } else if (!ends(w, "ss") && ends(w, "s")) {
      w.resize(w.size() - 1);
    }
    bool extra = false;
    if (ends(w, "eed")) {
      if (measure(w, w.size() - 3) > 0) w.resize(w.size() - 1);
    } else if (ends(w, "ed") && has_vowel(w, w.size() - 2)) {
      w.resize(w.size() - 2);
      extra = true;
    } else if (ends(w, "ing") && has_vowel(w, w.size() - 3)) {
      w.resize(w.size() - 3);
      extra = true;
    }
    if (!extra) return;
    if (ends(w, "at") || ends(w, "bl") || ends(w, "iz")) {
      w += 'e';
    } else if (double_cons(w, w.size())) {
      char c = w.back();
      if (c != 'l' && c != 's' && c != 'z') w.pop_back();
    } else if (measure(w, w.size()) == 1 && cvc(w, w.size())) {
      w += 'e';
    }
  }
  static void step1c(std::string& w) {
    if (ends(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
  }
  static void step2(std::string& w) {
    static const std::pair<const char*, const char*> rules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"bli", "ble"},     {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"}, {"biliti", "ble"},
        {"logi", "log"}};
    for (const auto& [s, r] : rules) {
      if (replace_if(w, s, r, 0)) return;
    }
  }
  static void step3(std::string& w) {
    static const std::pair<const char*, const char*> rules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""}};
    for (const auto& [s, r] : rules) {
      if (replace_if(w, s, r, 0)) return;
    }
  }
  static void step4(std::string& w) {
    static const char* suffixes[] = {"al",  "ance", "ence", "er",  "ic",  "able", "ible",
                                     "ant", "ement", "ment", "ent", "ion", "ou",   "ism",
                                     "ate", "iti",  "ous",  "ive", "ize"};
    for (const char* s : suffixes) {
      if (!ends(w, s)) continue;
      std::size_t k = stem_len(w, s);
      if (std::string_view(s) == "ion" && !(k > 0 && (w[k - 1] == 's' || w[k - 1] == 't'))) {
        return;
      }
      if (measure(w, k) > 1) w.resize(k);
      return;
    }
  }
  static void step5(std::string& w) {
    if (ends(w, "e")) {
      std::size_t k = w.size() - 1;
      int m = measure(w, k);
      if (m > 1 || (m == 1 && !cvc(w, k))) w.resize(k);
    }
    if (ends(w, "ll") && measure(w, w.size()) > 1) w.pop_back();
  }
};

// Snowball-style Dutch stemmer working on ASCII after accent folding.
class DutchStemmer final : public Stemmer {
 public:
  std::string stem(std::string_view word) const override {
    std::string w = fold(text::to_lower(word));
    if (w.size() <= 2) return w;
    // Mark consonantal y and i.
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 'y' && (i == 0 || vowel(w[i - 1]))) w[i] = 'Y';
      if (w[i] == 'i' && i > 0 && i + 1 < w.size() && vowel(w[i - 1]) && vowel(w[i + 1])) {
        w[i] = 'I';
      }
    }
    std::size_t r1 = region(w, 0);
    if (r1 < 3) r1 = std::min<std::size_t>(3, w.size());
    std::size_t r2 = region(w, r1);

    bool e_removed = false;
    // Step 1
    if (ends(w, "heden")) {
      if (w.size() - 5 >= r1) w.replace(w.size() - 5, 5, "heid");
    } else if (ends(w, "ene") || ends(w, "en")) {
      std::size_t k = w.size() - (ends(w, "ene") ? 3 : 2);
      if (k >= r1 && valid_en(w, k)) {
        w.resize(k);
        undouble(w);
      }
    } else if (ends(w, "se") || ends(w, "s")) {
      std::size_t k = w.size() - (ends(w, "se") ? 2 : 1);
      if (k >= r1 && valid_s(w, k)) w.resize(k);
    }
    // Step 2
    if (ends(w, "e") && w.size() - 1 >= r1 && w.size() >= 2 && !vowel(w[w.size() - 2])) {
      w.pop_back();
      undouble(w);
      e_removed = true;
    }
    // Step 3a
    if (ends(w, "heid") && w.size() - 4 >= r2 && (w.size() < 5 || w[w.size() - 5] != 'c')) {
      w.resize(w.size() - 4);
      if (ends(w, "en") && w.size() - 2 >= r1 && valid_en(w, w.size() - 2)) {
        w.resize(w.size() - 2);
        undouble(w);
      }
    }
    // Step 3b
    if (ends(w, "end") || ends(w, "ing")) {
      std::size_t k = w.size() - 3;
      if (k >= r2) {
        w.resize(k);
        if (ends(w, "ig") && w.size() - 2 >= r2 && (w.size() < 3 || w[w.size() - 3] != 'e')) {
          w.resize(w.size() - 2);
        } else {
          undouble(w);
        }
      }
    } else if (ends(w, "ig")) {
      std::size_t k = w.size() - 2;
      if (k >= r2 && (k == 0 || w[k - 1] != 'e')) w.resize(k);
    } else if (ends(w, "lijk")) {
      std::size_t k = w.size() - 4;
      if (k >= r2) {
        w.resize(k);
        if (ends(w, "e") && w.size() - 1 >= r1 && w.size() >= 2 && !vowel(w[w.size() - 2])) {
          w.pop_back();
          undouble(w);
        }
      }
    } else if (ends(w, "baar")) {
      if (w.size() - 4 >= r2) w.resize(w.size() - 4);
    } else if (ends(w, "bar")) {
      if (w.size() - 3 >= r2 && e_removed) w.resize(w.size() - 3);
    }
    // Step 4: undouble vowel in consonant-vowel-vowel-consonant endings.
    if (w.size() >= 4) {
      std::size_t n = w.size();
      char c1 = w[n - 4], v1 = w[n - 3], v2 = w[n - 2], c2 = w[n - 1];
      if (!vowel(c1) && v1 == v2 && (v1 == 'a' || v1 == 'e' || v1 == 'o' || v1 == 'u') &&
          !vowel(c2) && c2 != 'I') {
        w.erase(n - 2, 1);
      }
    }
    for (auto& c : w) {
      if (c == 'Y') c = 'y';
      if (c == 'I') c = 'i';
    }
    return w;
  }

 private:
  static bool vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  }
  static bool ends(const std::string& w, std::string_view s) { return text::ends_with(w, s); }
  static std::size_t region(const std::string& w, std::size_t from) {
    for (std::size_t i = from + 1; i < w.size(); ++i) {
      if (!vowel(w[i]) && vowel(w[i - 1])) return i + 1;
    }
    return w.size();
  }
  static bool valid_s(const std::string& w, std::size_t k) {
    if (k == 0) return false;
    char c = w[k - 1];
    return !vowel(c) && c != 'j';
  }
  static bool valid_en(const std::string& w, std::size_t k) {
    if (k == 0 || vowel(w[k - 1])) return false;
    return !(k >= 3 && w.compare(k - 3, 3, "gem") == 0);
  }
  static void undouble(std::string& w) {
    if (ends(w, "kk") || ends(w, "dd") || ends(w, "tt")) w.pop_back();
  }
  static std::string fold(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      unsigned char c = static_cast<unsigned char>(s[i]);
      if (c == 0xC3 && i + 1 < s.size()) {
        unsigned char d = static_cast<unsigned char>(s[i + 1]);
        char m = 0;
        if (d >= 0xA0 && d <= 0xA5) m = 'a';
        else if (d >= 0xA8 && d <= 0xAB) m = 'e';
        else if (d >= 0xAC && d <= 0xAF) m = 'i';
        else if (d >= 0xB2 && d <= 0xB6) m = 'o';
        else if (d >= 0xB9 && d <= 0xBC) m = 'u';
        if (m) {
          out.push_back(m);
          ++i;
          continue;
        }
      }
      out.push_back(static_cast<char>(c));
    }
    return out;
  }
};

}  // namespace

std::unique_ptr<Stemmer> make_stemmer(corpus::Language language) {
  if (language == corpus::Language::kNl) return std::make_unique<DutchStemmer>();
  return std::make_unique<PorterStemmer>();
}

// ---------------------------------------------------------------------------
// METEOR

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference,
                             const MeteorOptions& options) {
  const std::size_t nc = candidate.size(), nr = reference.size();
  std::vector<std::string> cl(nc), rl(nr);
  for (std::size_t i = 0; i < nc; ++i) cl[i] = text::to_lower(candidate[i]);
  for (std::size_t j = 0; j < nr; ++j) rl[j] = text::to_lower(reference[j]);

  std::vector<long> cand_to_ref(nc, -1);
  std::vector<bool> ref_used(nr, false);

  auto run_stage = [&](const std::vector<std::string>& ck, const std::vector<std::string>& rk,
                       const SynonymProvider* syn) {
    long previous = -1;
    for (std::size_t i = 0; i < nc; ++i) {
      if (cand_to_ref[i] >= 0) {
        previous = cand_to_ref[i];
        continue;
      }
      auto equal = [&](std::size_t j) {
        return syn ? (*syn)(ck[i], rk[j]) : ck[i] == rk[j];
      };
      long chosen = -1;
      // Prefer the position that continues the current chunk.
      if (previous + 1 < static_cast<long>(nr) && !ref_used[previous + 1] &&
          equal(static_cast<std::size_t>(previous + 1))) {
        chosen = previous + 1;
      } else {
        for (std::size_t j = 0; j < nr; ++j) {
          if (!ref_used[j] && equal(j)) {
            chosen = static_cast<long>(j);
            break;
          }
        }
      }
      if (chosen >= 0) {
        cand_to_ref[i] = chosen;
        ref_used[static_cast<std::size_t>(chosen)] = true;
        previous = chosen;
      }
    }
  };

  run_stage(cl, rl, nullptr);
  if (options.stemmer) {
    std::vector<std::string> cs(nc), rs(nr);
    for (std::size_t i = 0; i < nc; ++i) cs[i] = options.stemmer->stem(cl[i]);
    for (std::size_t j = 0; j < nr; ++j) rs[j] = options.stemmer->stem(rl[j]);
    run_stage(cs, rs, nullptr);
  }
  if (options.synonyms) run_stage(cl, rl, &options.synonyms);

  MeteorAlignment a;
  long last = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < nc; ++i) {
    if (cand_to_ref[i] < 0) {
      in_chunk = false;
      continue;
    }
    ++a.matches;
    if (!in_chunk || cand_to_ref[i] != last + 1) ++a.chunks;
    in_chunk = true;
    last = cand_to_ref[i];
  }
  return a;
}

double meteor_pair(const Tokens& candidate, const Tokens& reference,
                   const MeteorOptions& options) {
  auto a = meteor_align(candidate, reference, options);
  if (a.matches == 0) return 0.0;
  double m = static_cast<double>(a.matches);
  double p = m / static_cast<double>(candidate.size());
  double r = m / static_cast<double>(reference.size());
  double fmean = p * r / (options.alpha * p + (1.0 - options.alpha) * r);
  double penalty = options.gamma * std::pow(static_cast<double>(a.chunks) / m, options.beta);
  return fmean * (1.0 - penalty);
}

double meteor(std::span<const EvalPair> pairs, const MeteorOptions& options) {
  require_pairs(pairs, "meteor");
  double sum = 0.0;
  for (const auto& p : pairs) {
    double best = 0.0;
    for (const auto& r : p.references) best = std::max(best, meteor_pair(p.candidate, r, options));
    sum += best;
  }
  return sum / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_pair(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  double l = static_cast<double>(lcs_length(candidate, reference));
  if (l == 0.0) return 0.0;
  double p = l / static_cast<double>(candidate.size());
  double r = l / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

double rouge_l(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "rouge_l");
  double sum = 0.0;
  for (const auto& p : pairs) {
    double best = 0.0;
    for (const auto& r : p.references) best = std::max(best, rouge_l_pair(p.candidate, r));
    sum += best;
  }
  return sum / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Embedding score

EmbedScore greedy_match(const bridge::Matrix& similarity,
                        std::span<const double> candidate_weights,
                        std::span<const double> reference_weights) {
  const std::size_t nc = similarity.rows(), nr = similarity.cols();
  if (nc == 0 || nr == 0) return {};
  if (!candidate_weights.empty() && candidate_weights.size() != nc) {
    throw InvalidArgument("candidate weights do not match the similarity matrix");
  }
  if (!reference_weights.empty() && reference_weights.size() != nr) {
    throw InvalidArgument("reference weights do not match the similarity matrix");
  }
  auto cw = [&](std::size_t i) { return candidate_weights.empty() ? 1.0 : candidate_weights[i]; };
  auto rw = [&](std::size_t j) { return reference_weights.empty() ? 1.0 : reference_weights[j]; };

  double p_num = 0.0, p_den = 0.0, r_num = 0.0, r_den = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nr; ++j) best = std::max(best, similarity(i, j));
    p_num += cw(i) * best;
    p_den += cw(i);
  }
  for (std::size_t j = 0; j < nr; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nc; ++i) best = std::max(best, similarity(i, j));
    r_num += rw(j) * best;
    r_den += rw(j);
  }
  EmbedScore s;
  s.p = p_den > 0 ? p_num / p_den : 0.0;
  s.r = r_den > 0 ? r_num / r_den : 0.0;
  s.f1 = s.p + s.r > 0 ? 2.0 * s.p * s.r / (s.p + s.r) : 0.0;
  return s;
}

EmbedScore embed_score(std::span<const EvalPair> pairs, bridge::BridgeClient& bridge,
                       const EmbedOptions& options) {
  require_pairs(pairs, "embed_score");
  double fallback_idf = 1.0;
  if (options.idf && !options.idf->empty()) {
    fallback_idf = 0.0;
    for (const auto& [t, w] : *options.idf) fallback_idf = std::max(fallback_idf, w);
  }
  auto weights = [&](const Tokens& toks) {
    std::vector<double> w;
    if (!options.idf) return w;
    for (const auto& t : toks) {
      auto it = options.idf->find(text::to_lower(t));
      w.push_back(it != options.idf->end() ? it->second : fallback_idf);
    }
    return w;
  };

  EmbedScore total;
  for (const auto& p : pairs) {
    if (p.candidate.empty()) continue;
    auto cand = bridge.request_embedding(p.candidate);
    auto cw = weights(p.candidate);
    EmbedScore best;
    bool have = false;
    for (const auto& r : p.references) {
      if (r.empty()) continue;
      auto ref = bridge.request_embedding(r);
      bridge::Matrix sim(cand.vectors.rows(), ref.vectors.rows());
      for (std::size_t i = 0; i < sim.rows(); ++i) {
        for (std::size_t j = 0; j < sim.cols(); ++j) {
          sim(i, j) = augment::cosine(cand.vectors.row(i), ref.vectors.row(j));
        }
      }
      auto rw = weights(r);
      auto s = greedy_match(sim, cw, rw);
      if (!have || s.f1 > best.f1) best = s;
      have = true;
    }
    total.p += best.p;
    total.r += best.r;
    total.f1 += best.f1;
  }
  double n = static_cast<double>(pairs.size());
  total.p /= n;
  total.r /= n;
  total.f1 /= n;
  // No baseline exists for Dutch, so rescaling is never applied there.
  if (options.baseline && options.language != corpus::Language::kNl) {
    double b = *options.baseline;
    if (b >= 1.0) throw InvalidArgument("embedding baseline must be below 1");
    total.p = (total.p - b) / (1.0 - b);
    total.r = (total.r - b) / (1.0 - b);
    total.f1 = (total.f1 - b) / (1.0 - b);
  }
  return total;
}

}  // namespace d2tx::quality
