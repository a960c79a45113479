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

#include "d2tx/external.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <ctime>
#include <set>
#include <thread>

#include <httplib.h>

#include "d2tx/corpus_io.hpp"
#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::external {

RateLimiter::RateLimiter(double requests_per_second, double burst)
    : rate_(requests_per_second),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;
  std::unique_lock<std::mutex> lock(mutex_);
  while (true) {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

DiskCache::DiskCache(std::filesystem::path root, std::string service)
    : dir_(std::move(root) / std::move(service)) {}

std::filesystem::path DiskCache::path_for(std::string_view key) const {
  return dir_ / (sha256_hex(key) + ".json");
}

std::optional<Json> DiskCache::get(std::string_view key) const {
  auto p = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(p, ec)) return std::nullopt;
  try {
    return Json::parse(corpus::read_file(p));
  } catch (const std::exception&) {
    return std::nullopt;  // a corrupt entry counts as a miss
  }
}

void DiskCache::put(std::string_view key, const Json& value) const {
  std::filesystem::create_directories(dir_);
  corpus::write_file_atomic(path_for(key), value.dump(2) + "\n");
}

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

Url split_url(const std::string& endpoint) {
  auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw InvalidArgument("endpoint '" + endpoint + "' must start with http:// or https://");
  }
  auto slash = endpoint.find('/', scheme + 3);
  Url u;
  u.origin = endpoint.substr(0, slash);
  u.path = slash == std::string::npos ? "" : endpoint.substr(slash);
  while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();
  return u;
}

std::unique_ptr<httplib::Client> make_client(const Url& url, const HttpOptions& options) {
  auto client = std::make_unique<httplib::Client>(url.origin);
  auto secs = static_cast<time_t>(options.timeout_seconds);
  auto usecs = static_cast<time_t>((options.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client->set_connection_timeout(secs, usecs);
  client->set_read_timeout(secs, usecs);
  client->set_write_timeout(secs, usecs);
  return client;
}

// Runs request until it yields a non-retryable response. Transport errors,
// 429 and 5xx are retried with exponential backoff.
httplib::Result with_retries(const HttpOptions& options, std::size_t& calls,
                             const std::function<httplib::Result()>& request,
                             const std::string& what) {
  std::string log;
  int attempts = std::max(1, options.attempts);
  for (int k = 1; k <= attempts; ++k) {
    if (options.limiter) options.limiter->acquire();
    ++calls;
    auto res = request();
    if (res) {
      int status = res->status;
      if (status != 429 && status < 500) return res;
      log += "attempt " + std::to_string(k) + ": HTTP " + std::to_string(status) + "; ";
    } else {
      log += "attempt " + std::to_string(k) + ": " + httplib::to_string(res.error()) + "; ";
    }
    if (k < attempts) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(options.backoff_base_seconds * std::pow(2.0, k - 1)));
    }
  }
  if (log.size() >= 2) log.resize(log.size() - 2);
  throw IoError(what + " failed after " + std::to_string(attempts) + " attempts (" + log + ")");
}

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string encode_title(std::string_view title) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (char ch : text::trim(title)) {
    auto c = static_cast<unsigned char>(ch);
    if (c == ' ') {
      out.push_back('_');
    } else if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '(' ||
               c == ')' || c == ',') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace

std::string grammar_language_code(corpus::Language language) {
  return language == corpus::Language::kNl ? "nl" : "en-US";
}

GrammarClient::GrammarClient(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  if (options_.cache_root) cache_ = std::make_unique<DiskCache>(*options_.cache_root, "grammar");
}

GrammarResult GrammarClient::check(std::string_view text, corpus::Language language) {
  std::string lang = grammar_language_code(language);
  std::string key = lang + "\n" + std::string(text);
  GrammarResult result;
  result.text_id = sha256_hex(text).substr(0, 16);
  if (cache_) {
    if (auto hit = cache_->get(key); hit && hit->contains("matches")) {
      result.matches = (*hit)["matches"];
      result.error_count = result.matches.size();
      return result;
    }
  }
  Url url = split_url(endpoint_);
  httplib::Result res = [&] {
    std::lock_guard<std::mutex> lock(mutex_);
    auto client = make_client(url, options_);
    httplib::Params params{{"text", std::string(text)}, {"language", lang}};
    return with_retries(options_, network_calls_,
                        [&] { return client->Post(url.path + "/v2/check", params); },
                        "grammar check");
  }();
  if (res->status != 200) {
    throw IoError("grammar check returned HTTP " + std::to_string(res->status));
  }
  Json body;
  try {
    body = Json::parse(res->body);
  } catch (const std::exception& e) {
    throw ParseError(std::string("grammar check reply is not JSON: ") + e.what());
  }
  if (!body.contains("matches") || !body["matches"].is_array()) {
    throw ParseError("grammar check reply has no 'matches' array");
  }
  result.matches = body["matches"];
  result.error_count = result.matches.size();
  if (cache_) cache_->put(key, Json{{"language", lang}, {"matches", result.matches}});
  return result;
}

GrammarDelta grammar_delta(const std::vector<std::string>& originals,
                           const std::vector<std::string>& variants,
                           corpus::Language language, GrammarClient& client) {
  if (originals.size() != variants.size()) {
    throw InvalidArgument("originals and variants must be paired");
  }
  GrammarDelta delta;
  double sum = 0.0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    try {
      if (originals[i] == variants[i]) {
        ++delta.pairs;
        continue;
      }
      auto a = client.check(originals[i], language);
      auto b = client.check(variants[i], language);
      sum += static_cast<double>(b.error_count) - static_cast<double>(a.error_count);
      ++delta.pairs;
    } catch (const Error& e) {
      delta.skipped.push_back("pair " + std::to_string(i) + ": " + e.what());
    }
  }
  delta.mean = delta.pairs > 0 ? sum / static_cast<double>(delta.pairs) : 0.0;
  return delta;
}

std::string first_paragraph(std::string_view extract) {
  std::size_t pos = 0;
  while (pos <= extract.size()) {
    auto nl = extract.find('\n', pos);
    auto para = text::trim(extract.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                            : nl - pos));
    if (!para.empty()) return std::string(para);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return "";
}

SummaryClient::SummaryClient(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  if (options_.cache_root) cache_ = std::make_unique<DiskCache>(*options_.cache_root, "summary");
}

SummaryDoc SummaryClient::fetch(std::string_view title) {
  std::string key(text::trim(title));
  if (key.empty()) throw InvalidArgument("empty page title");
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      SummaryDoc doc;
      doc.title = hit->value("title", key);
      doc.first_paragraph = hit->value("first_paragraph", "");
      doc.url = hit->value("url", "");
      doc.fetched_at = hit->value("fetched_at", "");
      if (!doc.first_paragraph.empty()) return doc;
    }
  }
  Url url = split_url(endpoint_);
  std::string path = url.path + "/" + encode_title(key);
  httplib::Result res = [&] {
    std::lock_guard<std::mutex> lock(mutex_);
    auto client = make_client(url, options_);
    return with_retries(options_, network_calls_, [&] { return client->Get(path); },
                        "summary fetch for '" + key + "'");
  }();
  if (res->status == 404) throw NotFoundError("page '" + key + "' not found");
  if (res->status != 200) {
    throw IoError("summary fetch for '" + key + "' returned HTTP " + std::to_string(res->status));
  }
  Json body;
  try {
    body = Json::parse(res->body);
  } catch (const std::exception& e) {
    throw ParseError(std::string("summary reply is not JSON: ") + e.what());
  }
  if (!body.contains("extract") || !body["extract"].is_string()) {
    throw ParseError("summary reply for '" + key + "' has no 'extract' field");
  }
  SummaryDoc doc;
  doc.title = body.value("title", key);
  doc.first_paragraph = first_paragraph(body["extract"].get<std::string>());
  if (doc.first_paragraph.empty()) throw NotFoundError("page '" + key + "' has an empty summary");
  doc.url = url.origin + path;
  if (body.contains("content_urls") && body["content_urls"].contains("desktop") &&
      body["content_urls"]["desktop"].contains("page")) {
    doc.url = body["content_urls"]["desktop"]["page"].get<std::string>();
  }
  doc.fetched_at = now_iso8601();
  if (cache_) {
    cache_->put(key, Json{{"title", doc.title},
                          {"first_paragraph", doc.first_paragraph},
                          {"url", doc.url},
                          {"fetched_at", doc.fetched_at}});
  }
  return doc;
}

namespace {

const std::set<std::string, std::less<>>& abbreviations(corpus::Language language) {
  static const std::set<std::string, std::less<>> en = {
      "dr.",  "mr.",  "mrs.", "ms.",  "st.",   "prof.", "jr.",  "sr.",  "vs.",  "etc.",
      "e.g.", "i.e.", "inc.", "ltd.", "co.",   "no.",   "mt.",  "ft.",  "approx.", "jan.",
      "feb.", "mar.", "apr.", "aug.", "sep.",  "sept.", "oct.", "nov.", "dec.",  "gen.",
      "col.", "lt.",  "sgt.", "rev.", "est.",  "dept.", "univ.", "ave.", "blvd.", "fig."};
  static const std::set<std::string, std::less<>> nl = {
      "dhr.", "mevr.", "mw.",  "dr.",  "prof.", "bijv.", "o.a.", "d.w.z.", "ca.", "nr.",
      "st.",  "blz.",  "enz.", "m.b.t.", "i.p.v.", "t.o.v.", "jl.", "a.s.", "mr.", "ir.",
      "ing.", "drs.",  "jhr.", "e.d.", "z.g.", "resp.", "evt.", "vgl.", "tel.", "zgn."};
  return language == corpus::Language::kNl ? nl : en;
}

bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

}  // namespace

std::vector<std::string> split_sentences(std::string_view input, corpus::Language language) {
  std::vector<std::string> out;
  const auto& abbr = abbreviations(language);
  std::size_t start = 0;
  std::size_t i = 0;
  auto emit = [&](std::size_t end) {
    auto s = text::trim(input.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
  };
  while (i < input.size()) {
    if (!is_terminator(input[i])) {
      ++i;
      continue;
    }
    std::size_t term_begin = i;
    while (i < input.size() && is_terminator(input[i])) ++i;
    // Closing quotes and brackets stay with the sentence.
    while (i < input.size() && (input[i] == '"' || input[i] == '\'' || input[i] == ')')) ++i;
    std::size_t end = i;
    if (end >= input.size() || !text::is_space(input[end])) continue;
    std::size_t next = end;
    while (next < input.size() && text::is_space(input[next])) ++next;
    if (next >= input.size()) continue;
    std::size_t probe = next;
    char32_t cp = text::decode_utf8(input, probe);
    bool opens = text::is_upper_codepoint(cp) || (cp < 0x80 && text::is_digit(static_cast<char>(cp))) || cp == U'"' ||
                 cp == U'\'' || cp == U'(';
    if (!opens) continue;
    if (input[term_begin] == '.' && end == term_begin + 1) {
      std::size_t word_start = term_begin;
      while (word_start > start && !text::is_space(input[word_start - 1])) --word_start;
      std::string word = text::to_lower(input.substr(word_start, term_begin + 1 - word_start));
      while (!word.empty() && (word.front() == '(' || word.front() == '"')) word.erase(0, 1);
      if (abbr.count(word) > 0) continue;
      // A single capital letter followed by a period is an initial.
      if (term_begin - word_start == 1 &&
          std::isupper(static_cast<unsigned char>(input[word_start]))) {
        continue;
      }
    }
    emit(end);
    start = next;
    i = next;
  }
  emit(input.size());
  return out;
}

}  // namespace d2tx::external
