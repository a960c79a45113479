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

#ifndef D2TX_EXTERNAL_HPP_
#define D2TX_EXTERNAL_HPP_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2tx/corpus.hpp"
#include "d2tx/json.hpp"

// Clients for external services (grammar checker, page summaries) with an
// on-disk replay cache, plus the rule-based sentence splitter.
namespace d2tx::external {

// Token bucket shared by all clients that hold it.
class RateLimiter {
 public:
  // requests_per_second <= 0 disables limiting.
  explicit RateLimiter(double requests_per_second = 1.0, double burst = 1.0);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

// cache/<service>/<sha256-of-key>.json, written atomically.
class DiskCache {
 public:
  DiskCache(std::filesystem::path root, std::string service);
  std::optional<Json> get(std::string_view key) const;
  void put(std::string_view key, const Json& value) const;
  std::filesystem::path path_for(std::string_view key) const;

 private:
  std::filesystem::path dir_;
};

std::string sha256_hex(std::string_view data);

struct HttpOptions {
  double timeout_seconds = 10.0;
  int attempts = 3;
  // Delay before retry k (1-based) is base * 2^(k-1).
  double backoff_base_seconds = 0.5;
  std::shared_ptr<RateLimiter> limiter;
  std::optional<std::filesystem::path> cache_root;
};

struct GrammarResult {
  std::string text_id;
  std::size_t error_count = 0;
  Json matches = Json::array();  // raw payload, persisted in the cache
};

// POSTs form-encoded `text` and `language` to <endpoint>/v2/check.
class GrammarClient {
 public:
  GrammarClient(std::string endpoint, HttpOptions options = {});
  GrammarResult check(std::string_view text, corpus::Language language);
  std::size_t network_calls() const { return network_calls_; }

 private:
  std::string endpoint_;
  HttpOptions options_;
  std::unique_ptr<DiskCache> cache_;
  std::size_t network_calls_ = 0;
  std::mutex mutex_;
};

// LanguageTool language code for a corpus language.
std::string grammar_language_code(corpus::Language language);

struct GrammarDelta {
  double mean = 0.0;
  std::size_t pairs = 0;
  std::vector<std::string> skipped;  // one message per skipped pair
};

// Mean over pairs of errors(variant) - errors(original).
GrammarDelta grammar_delta(const std::vector<std::string>& originals,
                           const std::vector<std::string>& variants,
                           corpus::Language language, GrammarClient& client);

struct SummaryDoc {
  std::string title;
  std::string first_paragraph;
  std::string url;
  std::string fetched_at;  // ISO 8601 UTC
};

// GETs <endpoint>/<title> from a page-summary REST endpoint and keeps the
// first paragraph of its `extract`.
class SummaryClient {
 public:
  SummaryClient(std::string endpoint, HttpOptions options = {});
  SummaryDoc fetch(std::string_view title);
  std::size_t network_calls() const { return network_calls_; }

 private:
  std::string endpoint_;
  HttpOptions options_;
  std::unique_ptr<DiskCache> cache_;
  std::size_t network_calls_ = 0;
  std::mutex mutex_;
};

std::string first_paragraph(std::string_view extract);

// Splits after '.', '?' or '!' runs that are followed by whitespace and an
// uppercase letter or digit, unless the word before the terminator is a
// known abbreviation for the language.
std::vector<std::string> split_sentences(std::string_view text,
                                         corpus::Language language = corpus::Language::kEn);

}  // namespace d2tx::external

#endif  // D2TX_EXTERNAL_HPP_
