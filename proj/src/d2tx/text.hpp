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

#ifndef D2TX_TEXT_HPP_
#define D2TX_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and metrics. Case folding is
// ASCII plus the Latin-1 letter block, which covers English and Dutch.
namespace d2tx::text {

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
bool is_space(char c);

// Splits on every occurrence of `delim` (no trimming, empty pieces kept).
std::vector<std::string> split(std::string_view s, std::string_view delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string replace_all(std::string_view s, std::string_view from,
                        std::string_view to);

// UTF-8 helpers. Offsets stored on disk are code point offsets; in memory
// everything is byte offsets.
std::size_t codepoint_count(std::string_view s);
std::size_t codepoint_to_byte(std::string_view s, std::size_t cp_offset);
std::size_t byte_to_codepoint(std::string_view s, std::size_t byte_offset);
// Decodes the code point starting at `pos`; advances `pos`. Invalid bytes
// decode as themselves.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

// Unicode punctuation/symbol test used by the tokenizer.
bool is_punct_codepoint(char32_t cp);
bool is_upper_codepoint(char32_t cp);
bool is_digit(char c);

}  // namespace d2tx::text

#endif  // D2TX_TEXT_HPP_
