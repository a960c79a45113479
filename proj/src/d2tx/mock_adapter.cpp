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

#include "d2tx/mock_adapter.hpp"

#include <cmath>
#include <string_view>

#include "d2tx/corpus.hpp"
#include "d2tx/corpus_io.hpp"
#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::bridge {

namespace {

struct LexiconEntry {
  const char* word;
  std::vector<const char*> candidates;
};

// Candidate lists deliberately include capitalised and plural variants of
// the target so that the filtering rules are exercised.
const std::vector<LexiconEntry>& builtin_lexicon() {
  static const std::vector<LexiconEntry> lexicon = {
      {"weather", {"air", "climate", "Weather", "weathers", "forecast"}},
      {"afternoon", {"evening", "morning", "Afternoon", "afternoons"}},
      {"Preston", {"Manchester", "Leeds", "preston", "Prestons"}},
      {"pub", {"bar", "Pub", "pubs", "inn", "tavern"}},
      {"restaurant", {"eatery", "Restaurant", "restaurants", "diner", "bistro"}},
      {"food", {"cuisine", "dishes", "Food", "foods", "meals"}},
      {"city", {"town", "City", "cities", "capital"}},
      {"centre", {"center", "middle", "centres", "core"}},
      {"cheap", {"inexpensive", "affordable", "Cheap", "budget"}},
      {"riverside", {"waterfront", "riverbank", "Riverside", "river"}},
      {"coffee", {"tea", "espresso", "Coffee", "coffees"}},
      {"shop", {"store", "cafe", "shops", "Shop"}},
      {"high", {"top", "excellent", "High", "great"}},
      {"customer", {"client", "guest", "customers", "visitor"}},
      {"rating", {"score", "review", "ratings", "grade"}},
      {"Italian", {"French", "Spanish", "Italians", "italian"}},
      {"Indian", {"Thai", "Pakistani", "Indians", "indian"}},
      {"French", {"Belgian", "Italian", "Swiss", "french"}},
      {"Chinese", {"Korean", "Vietnamese", "chinese", "Japanese"}},
      {"Japanese", {"Korean", "Thai", "japanese", "Chinese"}},
      {"family", {"child", "families", "kid", "Family"}},
      {"friendly", {"welcoming", "Friendly", "suitable", "kind"}},
      {"dishes", {"meals", "plates", "dish", "food"}},
      {"moderate", {"reasonable", "fair", "average", "Moderate"}},
      {"price", {"cost", "prices", "rate", "Price"}},
      {"area", {"district", "region", "areas", "zone"}},
      {"average", {"mediocre", "typical", "Average", "decent"}},
      {"expensive", {"pricey", "costly", "Expensive", "dear"}},
      {"low", {"poor", "bad", "Low", "lower"}},
      {"Wildwood", {"Woodland", "Wildwoods", "wildwood"}},
      {"Eagle", {"Hawk", "Falcon", "Eagles"}},
      {"Curry", {"Masala", "Curries", "curry"}},
      {"Phoenix", {"Dragon", "Griffin", "phoenix"}},
      {"weer", {"klimaat", "Weer", "lucht"}},
      {"middag", {"avond", "ochtend", "middagen"}},
      {"regen", {"neerslag", "buien", "Regen"}},
  };
  return lexicon;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Json ok_reply(const Json& id, Json result) {
  Json r;
  r["id"] = id;
  r["ok"] = true;
  r["result"] = std::move(result);
  return r;
}

Json error_reply(const Json& id, const std::string& message) {
  Json r;
  r["id"] = id;
  r["ok"] = false;
  r["error"] = message;
  return r;
}

// Capitalised non-initial words and numbers become slots.
std::string fallback_labels(const std::string& text) {
  auto tokens = corpus::tokenize(text);
  std::vector<std::string> fields;
  std::string entity;
  auto flush = [&] {
    if (!entity.empty()) fields.push_back("entity @SEP@ " + entity);
    entity.clear();
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    std::size_t p = 0;
    char32_t first = text::decode_utf8(t, p);
    bool number = !t.empty() && text::is_digit(t[0]);
    if (number) {
      flush();
      fields.push_back("number @SEP@ " + t);
    } else if (i > 0 && text::is_upper_codepoint(first)) {
      if (!entity.empty()) entity.push_back(' ');
      entity += t;
    } else {
      flush();
    }
  }
  flush();
  if (fields.empty()) return "none";
  return text::join(fields, " @EOF@ ");
}

}  // namespace

MockAdapter::MockAdapter(std::uint64_t seed) : seed_(seed) {
  for (const auto& e : builtin_lexicon()) {
    std::vector<RawCandidate> cands;
    double score = 0.9;
    for (const char* c : e.candidates) {
      cands.push_back({c, score});
      score -= 0.1;
    }
    lexicon_[e.word] = std::move(cands);
  }
  translations_["It rains."] = "weatherType @SEP@ rain";
  translations_["Het regent."] = "weatherType @SEP@ regen";
}

void MockAdapter::load_fixture(const std::string& path) {
  Json j;
  try {
    j = Json::parse(corpus::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("mock fixture '" + path + "': " + e.what());
  }
  if (j.contains("lexicon")) {
    for (const auto& [word, list] : j["lexicon"].items()) {
      std::vector<RawCandidate> cands;
      for (const auto& c : list) cands.push_back({c.at(0).get<std::string>(), c.at(1).get<double>()});
      lexicon_[word] = std::move(cands);
    }
  }
  if (j.contains("translations")) {
    for (const auto& [text, ds] : j["translations"].items()) {
      translations_[text] = ds.get<std::string>();
    }
  }
}

std::vector<double> MockAdapter::token_vector(const std::string& token) const {
  std::uint64_t state = fnv1a(token, seed_);
  std::vector<double> v(kDimension);
  double norm = 0.0;
  for (auto& x : v) {
    x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<RawCandidate> MockAdapter::candidates(const std::string& token) const {
  auto it = lexicon_.find(token);
  if (it == lexicon_.end()) it = lexicon_.find(text::to_lower(token));
  if (it == lexicon_.end()) return {};
  return it->second;
}

std::string MockAdapter::translate(const std::string& prompt) const {
  for (std::string_view prefix : {"translate English to Data: ", "translate Dutch to Data: "}) {
    if (text::starts_with(prompt, prefix)) {
      auto payload = text::trim(std::string_view(prompt).substr(prefix.size()));
      auto it = translations_.find(payload);
      if (it != translations_.end()) return it->second;
      return fallback_labels(payload);
    }
  }
  if (text::starts_with(prompt, "Verbalize: ")) {
    return mock_verbalize(prompt.substr(11));
  }
  throw InvalidArgument("unsupported prompt prefix");
}

std::string mock_verbalize(const std::string& datastring) {
  std::vector<std::string> sentences;
  for (const auto& field : text::split(datastring, "@EOF@")) {
    auto parts = text::split(field, "@SEP@");
    for (auto& p : parts) p = text::trim(p);
    if (parts.size() == 2) {
      sentences.push_back("The " + parts[0] + " is " + parts[1] + ".");
    } else if (parts.size() == 3) {
      sentences.push_back("The " + parts[1] + " of " + parts[0] + " is " + parts[2] + ".");
    }
  }
  return text::join(sentences, " ");
}

Json MockAdapter::handle(const Json& request) const {
  Json id = request.contains("id") ? request["id"] : Json(0);
  try {
    auto task = request.at("task").get<std::string>();
    if (task == "candidates") {
      auto tokens = request.at("tokens").get<std::vector<std::string>>();
      auto idx = request.at("target_index").get<std::size_t>();
      if (idx >= tokens.size()) return error_reply(id, "target_index out of range");
      Json list = Json::array();
      for (const auto& c : candidates(tokens[idx])) {
        list.push_back({{"token", c.token}, {"score", c.provider_score}});
      }
      return ok_reply(id, list);
    }
    if (task == "embed") {
      auto tokens = request.at("tokens").get<std::vector<std::string>>();
      if (tokens.empty()) return error_reply(id, "empty token list");
      Json vectors = Json::array();
      Json attention = Json::array();
      const double w = 1.0 / static_cast<double>(tokens.size());
      for (const auto& t : tokens) {
        vectors.push_back(token_vector(t));
        attention.push_back(std::vector<double>(tokens.size(), w));
      }
      return ok_reply(id, {{"tokens", tokens}, {"vectors", vectors}, {"attention", attention}});
    }
    if (task == "translate") {
      auto prompt = request.at("prompt").get<std::string>();
      return ok_reply(id, {{"text", translate(prompt)}});
    }
    return error_reply(id, "unknown task '" + task + "'");
  } catch (const std::exception& e) {
    return error_reply(id, e.what());
  }
}

std::string MockAdapter::handle_line(const std::string& line) const {
  Json request;
  try {
    request = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    return error_reply(0, std::string("malformed request: ") + e.what()).dump();
  }
  return handle(request).dump();
}

namespace {

class MockChannel : public Channel {
 public:
  explicit MockChannel(const BridgeConfig& config) : adapter_(config.mock_seed) {
    if (!config.mock_fixture.empty()) adapter_.load_fixture(config.mock_fixture);
  }
  std::string roundtrip(const std::string& line, std::chrono::milliseconds) override {
    return adapter_.handle_line(line);
  }

 private:
  MockAdapter adapter_;
};

}  // namespace

std::unique_ptr<Channel> open_mock_channel(const BridgeConfig& config) {
  return std::make_unique<MockChannel>(config);
}

}  // namespace d2tx::bridge
