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

#ifndef D2TX_DATALANG_HPP_
#define D2TX_DATALANG_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "d2tx/corpus.hpp"

// Flat "data language" linearization of meaning representations:
//   key @SEP@ value @EOF@ key @SEP@ value
//   subject @SEP@ predicate @SEP@ object @EOF@ ...
namespace d2tx::datalang {

inline constexpr std::string_view kSep = " @SEP@ ";
inline constexpr std::string_view kEof = " @EOF@ ";

std::string serialize_mr(const corpus::MR& mr);

struct FieldWarning {
  std::size_t field_index = 0;  // 0-based position in the raw string
  std::string field;
  std::string message;
};

struct ParseReport {
  corpus::MR mr;
  std::vector<FieldWarning> warnings;
};

// Recovers every field with the right component count for `shape`; fields
// with the wrong arity are dropped and reported. Throws ParseError when no
// field survives.
ParseReport parse_datalang(std::string_view raw, corpus::MrShape shape);

std::string make_labeling_prompt(corpus::Language language, std::string_view text);
std::string make_verbalize_prompt(std::string_view datastring);

}  // namespace d2tx::datalang

#endif  // D2TX_DATALANG_HPP_
