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

#ifndef D2TX_CORPUS_IO_HPP_
#define D2TX_CORPUS_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "d2tx/corpus.hpp"
#include "d2tx/json.hpp"

namespace d2tx::corpus {

// Canonical on-disk form: one JSON object per line with keys id, mr, text,
// spans, language, domain, split, and optionally pos and provenance.
Json instance_to_json(const Instance& instance);
// `line` is used only to name the instance and in error messages.
Instance instance_from_json(const Json& j, std::size_t line);
Json mr_to_json(const MR& mr);
MR mr_from_json(const Json& j);

std::string to_canonical_line(const Instance& instance);

Corpus read_canonical(const std::filesystem::path& path);
Corpus read_canonical_string(std::string_view content, std::string name = "");
void write_canonical(const Corpus& corpus, const std::filesystem::path& path);
std::string canonical_string(const Corpus& corpus);

enum class NativeFormat { kE2eCsv, kWebNlg, kEnrichedKv, kCanonical };
NativeFormat parse_native_format(std::string_view name);

struct NativeOptions {
  Split split = Split::kTrain;
  std::string domain;  // empty: format default
  Language language = Language::kEn;
};

struct LoadIssue {
  std::size_t line = 0;
  std::string message;
};

struct NativeLoad {
  Corpus corpus;
  std::vector<LoadIssue> issues;
};

// Converts a native corpus file. Rows that fail to parse are skipped and
// reported in `issues` with their 1-based line number.
NativeLoad read_native(const std::filesystem::path& path, NativeFormat format,
                       const NativeOptions& options);
NativeLoad read_native_string(std::string_view content, NativeFormat format,
                              const NativeOptions& options);

// RFC 4180 style CSV reader (quoted fields, doubled quotes, embedded
// newlines). Each row carries the line number it started on.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRow> parse_csv(std::string_view content);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace d2tx::corpus

#endif  // D2TX_CORPUS_IO_HPP_
