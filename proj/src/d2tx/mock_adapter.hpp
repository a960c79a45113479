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

#ifndef D2TX_MOCK_ADAPTER_HPP_
#define D2TX_MOCK_ADAPTER_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "d2tx/bridge.hpp"
#include "d2tx/json.hpp"

namespace d2tx::bridge {

// Deterministic stand-in for a model adapter. It speaks the same JSON lines
// protocol as a real adapter:
//   candidates  - entries of a fixed substitution lexicon (exact token, then
//                 lowercased), in lexicon order, with fixed scores
//   embed       - per-token unit vectors with non-negative components drawn
//                 from a seeded hash of the token; uniform attention rows
//   translate   - "translate <Lang> to Data: t" looks t up in a translation
//                 table and otherwise tags capitalised words and numbers;
//                 "Verbalize: ds" renders one templated sentence per field
class MockAdapter {
 public:
  static constexpr std::size_t kDimension = 16;

  explicit MockAdapter(std::uint64_t seed = 0);
  // Merges "lexicon": {word: [[candidate, score], ...]} and "translations":
  // {text: datastring} from a JSON file.
  void load_fixture(const std::string& path);

  Json handle(const Json& request) const;
  std::string handle_line(const std::string& line) const;

  std::vector<double> token_vector(const std::string& token) const;
  std::vector<RawCandidate> candidates(const std::string& token) const;
  std::string translate(const std::string& prompt) const;

 private:
  std::uint64_t seed_;
  std::map<std::string, std::vector<RawCandidate>> lexicon_;
  std::map<std::string, std::string> translations_;
};

// Renders the mock verbalization of a data string.
std::string mock_verbalize(const std::string& datastring);

}  // namespace d2tx::bridge

#endif  // D2TX_MOCK_ADAPTER_HPP_
