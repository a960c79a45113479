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

#include "d2tx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "d2tx/error.hpp"

namespace d2tx::stats {

double multi_kappa(const RatingMatrix& ratings) {
  if (ratings.size() < 2) throw InvalidArgument("kappa needs at least two raters");
  const std::size_t items = ratings.front().size();
  if (items == 0) throw InvalidArgument("kappa needs at least one item");
  for (const auto& row : ratings) {
    if (row.size() != items) throw InvalidArgument("every rater must label every item");
    for (const auto& label : row) {
      if (label.empty()) throw InvalidArgument("empty rating label");
    }
  }
  const double r = static_cast<double>(ratings.size());
  std::map<std::string, double> pooled;
  double agreement = 0.0;
  for (std::size_t i = 0; i < items; ++i) {
    std::map<std::string, double> counts;
    for (const auto& row : ratings) counts[row[i]] += 1.0;
    double agree = 0.0;
    for (const auto& [label, n] : counts) {
      agree += n * (n - 1.0);
      pooled[label] += n;
    }
    agreement += agree / (r * (r - 1.0));
  }
  double po = agreement / static_cast<double>(items);
  double total = r * static_cast<double>(items);
  double pe = 0.0;
  for (const auto& [label, n] : pooled) pe += (n / total) * (n / total);
  if (pe >= 1.0 - 1e-15) {
    if (po >= 1.0 - 1e-15) return 1.0;
    throw ValidationError("kappa undefined: expected agreement is 1");
  }
  return (po - pe) / (1.0 - pe);
}

void validate_table(const ContingencyTable& table) {
  if (table.counts.size() < 2) throw ValidationError("contingency table needs at least two rows");
  std::size_t cols = table.counts.front().size();
  if (cols < 2) throw ValidationError("contingency table needs at least two columns");
  for (const auto& row : table.counts) {
    if (row.size() != cols) throw ValidationError("contingency table rows differ in length");
    for (double v : row) {
      if (!std::isfinite(v) || v < 0) throw ValidationError("contingency counts must be non-negative");
    }
  }
  if (!table.row_labels.empty() && table.row_labels.size() != table.counts.size()) {
    throw ValidationError("row labels do not match the table");
  }
  if (!table.col_labels.empty() && table.col_labels.size() != cols) {
    throw ValidationError("column labels do not match the table");
  }
}

namespace {

std::string row_name(const ContingencyTable& t, std::size_t r) {
  return r < t.row_labels.size() ? t.row_labels[r] : "row " + std::to_string(r + 1);
}

std::string col_name(const ContingencyTable& t, std::size_t c) {
  return c < t.col_labels.size() ? t.col_labels[c] : "column " + std::to_string(c + 1);
}

}  // namespace

ChiSquareResult chi_square(const ContingencyTable& table, const ChiSquareOptions& options) {
  validate_table(table);
  ChiSquareResult result;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  for (std::size_t r = 0; r < table.counts.size(); ++r) {
    double sum = 0.0;
    for (double v : table.counts[r]) sum += v;
    if (sum == 0.0) {
      if (!options.drop_empty_rows) {
        throw ValidationError("row '" + row_name(table, r) + "' has a zero marginal");
      }
      result.dropped_rows.push_back(row_name(table, r));
      continue;
    }
    rows.push_back(table.counts[r]);
    names.push_back(row_name(table, r));
  }
  if (rows.size() < 2) throw ValidationError("fewer than two non-empty rows remain");
  const std::size_t nr = rows.size(), nc = rows.front().size();
  std::vector<double> row_sum(nr, 0.0), col_sum(nc, 0.0);
  double grand = 0.0;
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      row_sum[r] += rows[r][c];
      col_sum[c] += rows[r][c];
      grand += rows[r][c];
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (col_sum[c] == 0.0) {
      throw ValidationError("column '" + col_name(table, c) + "' has a zero marginal");
    }
  }
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      double e = row_sum[r] * col_sum[c] / grand;
      double d = rows[r][c] - e;
      result.chi2 += d * d / e;
    }
  }
  result.df = static_cast<int>((nr - 1) * (nc - 1));
  result.p = chi_square_sf(result.chi2, result.df);
  return result;
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0)) throw InvalidArgument("incomplete gamma needs a > 0");
  if (x < 0) throw InvalidArgument("incomplete gamma needs x >= 0");
  if (x == 0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  if (x < a + 1.0) {
    // Series for P(a, x).
    double term = 1.0 / a, sum = term, ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return std::max(0.0, 1.0 - sum * std::exp(log_prefix));
  }
  // Continued fraction for Q(a, x), modified Lentz.
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::min(1.0, std::exp(log_prefix) * h);
}

double chi_square_sf(double x, int df) {
  if (df < 1) throw InvalidArgument("chi-square needs df >= 1");
  if (x < 0) throw InvalidArgument("chi-square statistic must be non-negative");
  return regularized_gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

std::vector<std::string> compact_letters(
    std::size_t k, const std::vector<std::pair<std::size_t, std::size_t>>& different,
    const std::vector<double>& proportions) {
  if (proportions.size() != k) throw InvalidArgument("one proportion per column expected");
  std::vector<std::set<std::size_t>> groups;
  std::set<std::size_t> all;
  for (std::size_t c = 0; c < k; ++c) all.insert(c);
  groups.push_back(all);
  for (auto [i, j] : different) {
    std::vector<std::set<std::size_t>> next;
    for (const auto& g : groups) {
      if (g.count(i) && g.count(j)) {
        auto a = g, b = g;
        a.erase(i);
        b.erase(j);
        next.push_back(a);
        next.push_back(b);
      } else {
        next.push_back(g);
      }
    }
    // Absorb groups contained in another group.
    std::vector<std::set<std::size_t>> kept;
    for (std::size_t x = 0; x < next.size(); ++x) {
      bool absorbed = next[x].empty();
      for (std::size_t y = 0; y < next.size() && !absorbed; ++y) {
        if (x == y) continue;
        bool subset = std::includes(next[y].begin(), next[y].end(), next[x].begin(), next[x].end());
        if (subset && (next[x] != next[y] || y < x)) absorbed = true;
      }
      if (!absorbed) kept.push_back(next[x]);
    }
    groups = std::move(kept);
  }
  auto top = [&](const std::set<std::size_t>& g) {
    double m = -std::numeric_limits<double>::infinity();
    for (auto c : g) m = std::max(m, proportions[c]);
    return m;
  };
  std::sort(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
    double ta = top(a), tb = top(b);
    if (ta != tb) return ta > tb;
    return *a.begin() < *b.begin();
  });
  std::vector<std::string> letters(k);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::string letter(1, static_cast<char>('a' + static_cast<int>(g % 26)));
    if (g >= 26) letter += std::to_string(g / 26);
    for (auto c : groups[g]) {
      if (!letters[c].empty()) letters[c] += ",";
      letters[c] += letter;
    }
  }
  return letters;
}

std::vector<RowLetters> pairwise_column_z(const ContingencyTable& table, double alpha,
                                          bool bonferroni) {
  validate_table(table);
  const std::size_t nc = table.counts.front().size();
  std::vector<double> totals(nc, 0.0);
  for (const auto& row : table.counts) {
    for (std::size_t c = 0; c < nc; ++c) totals[c] += row[c];
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (totals[c] <= 0) {
      throw ValidationError("column '" + col_name(table, c) + "' has a zero total");
    }
  }
  const double pairs = static_cast<double>(nc * (nc - 1) / 2);
  const double threshold = bonferroni ? alpha / pairs : alpha;

  std::vector<RowLetters> out;
  for (std::size_t r = 0; r < table.counts.size(); ++r) {
    const auto& row = table.counts[r];
    RowLetters rl;
    rl.row = row_name(table, r);
    std::vector<double> props(nc);
    for (std::size_t c = 0; c < nc; ++c) props[c] = row[c] / totals[c];
    std::vector<std::pair<std::size_t, std::size_t>> different;
    for (std::size_t a = 0; a < nc; ++a) {
      for (std::size_t b = a + 1; b < nc; ++b) {
        PairTest t{a, b, 0.0, 1.0, false};
        double pooled = (row[a] + row[b]) / (totals[a] + totals[b]);
        double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / totals[a] + 1.0 / totals[b]));
        if (se > 0) {
          t.z = (props[a] - props[b]) / se;
          t.p = std::erfc(std::fabs(t.z) / std::sqrt(2.0));
          t.significant = t.p < threshold;
        }
        if (t.significant) different.emplace_back(a, b);
        rl.tests.push_back(t);
      }
    }
    rl.letters = compact_letters(nc, different, props);
    out.push_back(std::move(rl));
  }
  return out;
}

std::vector<LikertCriterion> default_criteria() {
  return {{"fluency", 1, 7, false}, {"correctness", 1, 7, false}, {"grammaticality", 1, 4, true}};
}

LikertReport likert_descriptives(const std::vector<LikertRating>& ratings,
                                 const std::vector<LikertCriterion>& criteria) {
  LikertReport report;
  std::map<std::string, const LikertCriterion*> by_name;
  for (const auto& c : criteria) {
    if (c.min >= c.max) throw InvalidArgument("criterion '" + c.name + "' has an empty scale");
    by_name[c.name] = &c;
  }
  std::vector<std::string> datasets, methods;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> cells;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : ratings) {
    auto it = by_name.find(r.criterion);
    if (it == by_name.end()) throw InvalidArgument("unknown criterion '" + r.criterion + "'");
    const auto& c = *it->second;
    if (!(r.value >= c.min && r.value <= c.max)) {
      throw InvalidArgument("rating " + std::to_string(r.value) + " outside " + c.name +
                            " scale " + std::to_string(c.min) + "-" + std::to_string(c.max));
    }
    remember(datasets, r.dataset);
    remember(methods, r.method);
    double v = c.reverse ? static_cast<double>(c.min + c.max) - r.value : r.value;
    cells[{r.dataset, r.method, r.criterion}].push_back(v);
  }
  for (const auto& d : datasets) {
    for (const auto& m : methods) {
      for (const auto& c : criteria) {
        auto it = cells.find({d, m, c.name});
        if (it == cells.end()) {
          report.warnings.push_back("no " + c.name + " ratings for " + d + " / " + m);
          continue;
        }
        const auto& v = it->second;
        LikertCell cell{d, m, c.name, v.size(), 0.0, std::nullopt};
        for (double x : v) cell.mean += x;
        cell.mean /= static_cast<double>(v.size());
        if (v.size() >= 2) {
          double ss = 0.0;
          for (double x : v) ss += (x - cell.mean) * (x - cell.mean);
          cell.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  while (true) {
    std::uint64_t v = rng();
    if (v < limit) return v % n;
  }
}

}  // namespace

SampleResult sample_eval_items(const std::vector<EvalCandidate>& pool,
                               const SampleOptions& options) {
  if (options.min_slots > options.max_slots) throw InvalidArgument("min_slots exceeds max_slots");
  SampleResult result;
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& it = pool[i];
    std::pair<std::string, std::string> cell{it.method, it.domain};
    if (!eligible.count(cell)) {
      order.push_back(cell);
      eligible[cell];
    }
    if (it.slot_count >= options.min_slots && it.slot_count <= options.max_slots) {
      eligible[cell].push_back(i);
    }
  }
  std::mt19937_64 rng(options.seed);
  for (const auto& cell : order) {
    auto idx = eligible[cell];
    std::size_t take = std::min(options.per_cell, idx.size());
    if (take < options.per_cell) {
      result.warnings.push_back("cell " + cell.first + " / " + cell.second + ": only " +
                                std::to_string(idx.size()) + " eligible items, wanted " +
                                std::to_string(options.per_cell));
    }
    for (std::size_t k = 0; k < take; ++k) {
      auto j = k + static_cast<std::size_t>(bounded(rng, idx.size() - k));
      std::swap(idx[k], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) result.items.push_back(pool[i]);
  }
  return result;
}

}  // namespace d2tx::stats
