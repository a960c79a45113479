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


// Brute-force reference implementations written from the metric
// definitions, and random-input generators shared by the unit and
// acceptance tests.

#ifndef D2TX_TESTS_ORACLES_HPP_
#define D2TX_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "d2tx/corpus.hpp"
#include "d2tx/pseudolabel.hpp"
#include "d2tx/quality.hpp"

namespace d2tx::oracle {

using corpus::MR;
using corpus::Slot;
using quality::EvalPair;
using quality::Tokens;

inline Tokens toks(std::string_view s) {
  Tokens out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline EvalPair pair(std::string_view cand, std::vector<std::string_view> refs) {
  EvalPair p;
  p.candidate = toks(cand);
  for (auto r : refs) p.references.push_back(toks(r));
  return p;
}

inline std::size_t occurrences(const Tokens& seq, const Tokens& gram) {
  std::size_t n = gram.size(), c = 0;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    if (std::equal(gram.begin(), gram.end(), seq.begin() + static_cast<long>(i))) ++c;
  }
  return c;
}

inline std::vector<Tokens> distinct_grams(const Tokens& seq, std::size_t n) {
  std::vector<Tokens> out;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    Tokens g(seq.begin() + static_cast<long>(i), seq.begin() + static_cast<long>(i + n));
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

inline double oracle_bleu(const std::vector<EvalPair>& pairs) {
  double matched[5] = {0, 0, 0, 0, 0}, total[5] = {0, 0, 0, 0, 0};
  double c = 0, r = 0;
  for (const auto& p : pairs) {
    for (std::size_t n = 1; n <= 4; ++n) {
      for (const auto& g : distinct_grams(p.candidate, n)) {
        std::size_t best = 0;
        for (const auto& ref : p.references) best = std::max(best, occurrences(ref, g));
        matched[n] += static_cast<double>(std::min(occurrences(p.candidate, g), best));
      }
      if (p.candidate.size() >= n) total[n] += static_cast<double>(p.candidate.size() - n + 1);
    }
    c += static_cast<double>(p.candidate.size());
    double best_len = 1e18, best_diff = 1e18;
    for (const auto& ref : p.references) {
      double len = static_cast<double>(ref.size());
      double diff = std::fabs(len - static_cast<double>(p.candidate.size()));
      if (diff < best_diff || (diff == best_diff && len < best_len)) {
        best_diff = diff;
        best_len = len;
      }
    }
    r += best_len;
  }
  if (c == 0) return 0;
  double log_sum = 0;
  int orders = 0;
  for (int n = 1; n <= 4; ++n) {
    if (total[n] == 0) continue;
    if (matched[n] == 0) return 0;
    log_sum += std::log(matched[n] / total[n]);
    ++orders;
  }
  double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(log_sum / orders);
}

inline double oracle_nist(const std::vector<EvalPair>& pairs) {
  std::vector<Tokens> all_refs;
  double ref_len = 0, sys_len = 0;
  for (const auto& p : pairs) {
    std::vector<Tokens> seen;
    for (const auto& r : p.references) {
      if (std::find(seen.begin(), seen.end(), r) == seen.end()) seen.push_back(r);
    }
    double s = 0;
    for (const auto& r : seen) {
      all_refs.push_back(r);
      s += static_cast<double>(r.size());
    }
    ref_len += s / static_cast<double>(seen.size());
    sys_len += static_cast<double>(p.candidate.size());
  }
  auto ref_count = [&](const Tokens& g) {
    double c = 0;
    for (const auto& r : all_refs) c += static_cast<double>(occurrences(r, g));
    return c;
  };
  double words = 0;
  for (const auto& r : all_refs) words += static_cast<double>(r.size());
  double score = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    double info = 0, cand_grams = 0;
    for (const auto& p : pairs) {
      if (p.candidate.size() >= n) cand_grams += static_cast<double>(p.candidate.size() - n + 1);
      for (const auto& g : distinct_grams(p.candidate, n)) {
        std::size_t best = 0;
        for (const auto& ref : p.references) best = std::max(best, occurrences(ref, g));
        double m = static_cast<double>(std::min(occurrences(p.candidate, g), best));
        if (m == 0) continue;
        double prefix = n == 1 ? words : ref_count(Tokens(g.begin(), g.end() - 1));
        info += m * std::log2(prefix / ref_count(g));
      }
    }
    if (cand_grams > 0) score += info / cand_grams;
  }
  double beta = -std::log(2.0) / (std::log(1.5) * std::log(1.5));
  double ratio = std::min(1.0, sys_len / ref_len);
  return score * std::exp(beta * std::log(ratio) * std::log(ratio));
}

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (const auto& t : seq) {
    if (j < sub.size() && sub[j] == t) ++j;
  }
  return j == sub.size();
}

// Enumerates every subsequence of the candidate.
inline std::size_t oracle_lcs(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline double oracle_rouge(const std::vector<EvalPair>& pairs) {
  double sum = 0;
  for (const auto& p : pairs) {
    double best = 0;
    for (const auto& r : p.references) {
      double l = static_cast<double>(oracle_lcs(p.candidate, r));
      if (l == 0) continue;
      double pr = l / static_cast<double>(p.candidate.size());
      double rc = l / static_cast<double>(r.size());
      best = std::max(best, 2 * pr * rc / (pr + rc));
    }
    sum += best;
  }
  return sum / static_cast<double>(pairs.size());
}

inline std::vector<EvalPair> random_pairs(std::mt19937_64& rng, std::size_t count) {
  std::uniform_int_distribution<int> sym(0, 9), len(1, 8), nrefs(1, 3);
  auto seq = [&] {
    Tokens t;
    int n = len(rng);
    for (int i = 0; i < n; ++i) t.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
    return t;
  };
  std::vector<EvalPair> out;
  for (std::size_t i = 0; i < count; ++i) {
    EvalPair p;
    p.candidate = seq();
    int k = nrefs(rng);
    for (int j = 0; j < k; ++j) p.references.push_back(seq());
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string norm(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    char d = c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (d == ' ') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(d);
  }
  return out;
}

// Multiset intersection of normalised (key, value) pairs per item.
inline pseudolabel::LabelCounts oracle_counts(const std::vector<MR>& pred,
                                              const std::vector<MR>& gold) {
  pseudolabel::LabelCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::map<std::pair<std::string, std::string>, int> p, g;
    for (const auto& s : pred[i].slots()) ++p[{norm(s.key), norm(s.value)}];
    for (const auto& s : gold[i].slots()) ++g[{norm(s.key), norm(s.value)}];
    for (const auto& [k, n] : p) c.matched += static_cast<std::size_t>(std::min(n, g[k]));
    c.predicted += pred[i].size();
    c.gold += gold[i].size();
  }
  return c;
}

inline std::vector<MR> random_mrs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> len(1, 5), sym(0, 3);
  const char* keys[] = {"name", "Food", "area_x", "price"};
  const char* vals[] = {"A", "b", "c d", "C_D"};
  std::vector<MR> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Slot> s;
    int k = len(rng);
    for (int j = 0; j < k; ++j) s.push_back({keys[sym(rng)], vals[sym(rng)]});
    out.push_back(MR(std::move(s)));
  }
  return out;
}

inline std::string random_value(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 12);
  std::string out;
  int n = len(rng);
  // Whole pieces keep multi-byte characters intact.
  static const std::vector<std::string> pieces = {"a", "b", "c", "X", "Y", "Z", "0", "1", "9",
                                                  " ", ",", ".", ";", ":", "'", "(", ")", "-",
                                                  "&", "/", "[", "]", "!", "?", "\"", "£", "é",
                                                  "@", "|"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  for (int i = 0; i < n; ++i) out += pieces[pick(rng)];
  auto b = out.find_first_not_of(' ');
  if (b == std::string::npos) return "v";
  out = out.substr(b, out.find_last_not_of(' ') - b + 1);
  return out;
}

inline std::vector<std::string> random_texts(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> len(1, 12), sym(0, 14);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    int k = len(rng);
    for (int j = 0; j < k; ++j) {
      if (j) s += ' ';
      int c = sym(rng);
      s += c == 14 ? std::string(".") : "w" + std::to_string(c);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace d2tx::oracle

#endif  // D2TX_TESTS_ORACLES_HPP_
