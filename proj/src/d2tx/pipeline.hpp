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

#ifndef D2TX_PIPELINE_HPP_
#define D2TX_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace d2tx::pipeline {

// Flat key=value configuration. Values set through set() override values
// loaded from a file, which override built-in defaults.
class Config {
 public:
  static bool is_known_key(std::string_view key);
  static std::vector<std::string> known_keys();

  void load_file(const std::filesystem::path& path);
  void load_string(std::string_view content, const std::string& origin = "<string>");
  void set(std::string_view key, std::string_view value);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string_view fallback) const;
  std::string require(std::string_view key) const;
  long long get_int(std::string_view key, long long fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

 private:
  void check_key(std::string_view key) const;
  std::map<std::string, std::string, std::less<>> file_;
  std::map<std::string, std::string, std::less<>> overrides_;
};

struct CommandResult {
  std::string output;  // printed on stdout
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> written;
};

CommandResult cmd_convert(const Config& config);
CommandResult cmd_extend(const Config& config);
CommandResult cmd_eval(const Config& config);
CommandResult cmd_stats(const Config& config);
CommandResult cmd_report(const Config& config);

// Dispatches on "convert", "extend", "eval", "stats" or "report".
CommandResult run_command(std::string_view command, const Config& config);

// Helpers shared with the report writers.
std::string csv_line(const std::vector<std::string>& cells);
std::string to_csv(const std::vector<std::vector<std::string>>& rows);
std::string to_markdown(const std::vector<std::vector<std::string>>& rows);
std::string format_fixed(double value, int decimals);

}  // namespace d2tx::pipeline

#endif  // D2TX_PIPELINE_HPP_
