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

#ifndef D2TX_STATS_HPP_
#define D2TX_STATS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace d2tx::stats {

// ratings[r][i] is rater r's label for item i.
using RatingMatrix = std::vector<std::vector<std::string>>;

double multi_kappa(const RatingMatrix& ratings);

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> counts;  // rows x cols, non-negative
};

void validate_table(const ContingencyTable& table);

struct ChiSquareOptions {
  // Rows whose counts are all zero carry no information; dropping them
  // instead of failing mirrors how statistics packages treat empty categories.
  bool drop_empty_rows = false;
};

struct ChiSquareResult {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
  std::vector<std::string> dropped_rows;
};

ChiSquareResult chi_square(const ContingencyTable& table, const ChiSquareOptions& options = {});

// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);
double chi_square_sf(double x, int df);

struct PairTest {
  std::size_t col_a = 0;
  std::size_t col_b = 0;
  double z = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct RowLetters {
  std::string row;
  std::vector<std::string> letters;  // per column, e.g. "a", "a,b"
  std::vector<PairTest> tests;
};

std::vector<RowLetters> pairwise_column_z(const ContingencyTable& table, double alpha = 0.05,
                                          bool bonferroni = true);

// Letters from a significance relation over k columns; proportions order
// the groups (highest first).
std::vector<std::string> compact_letters(std::size_t k,
                                         const std::vector<std::pair<std::size_t, std::size_t>>&
                                             different,
                                         const std::vector<double>& proportions);

struct LikertCriterion {
  std::string name;
  int min = 1;
  int max = 7;
  bool reverse = false;
};

struct LikertRating {
  std::string dataset;
  std::string method;
  std::string criterion;
  double value = 0.0;
};

struct LikertCell {
  std::string dataset;
  std::string method;
  std::string criterion;
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // sample SD, absent for n < 2
};

struct LikertReport {
  std::vector<LikertCell> cells;
  std::vector<std::string> warnings;
};

// Fluency and correctness on 1-7, grammaticality on 1-4 reverse-coded.
std::vector<LikertCriterion> default_criteria();

LikertReport likert_descriptives(const std::vector<LikertRating>& ratings,
                                 const std::vector<LikertCriterion>& criteria);

struct EvalCandidate {
  std::string id;
  std::string method;
  std::string domain;
  std::size_t slot_count = 0;
};

struct SampleOptions {
  std::size_t per_cell = 40;
  std::size_t min_slots = 2;
  std::size_t max_slots = 6;
  std::uint64_t seed = 0;
};

struct SampleResult {
  std::vector<EvalCandidate> items;  // grouped by cell, input order inside a cell
  std::vector<std::string> warnings;
};

SampleResult sample_eval_items(const std::vector<EvalCandidate>& pool,
                               const SampleOptions& options);

}  // namespace d2tx::stats

#endif  // D2TX_STATS_HPP_
