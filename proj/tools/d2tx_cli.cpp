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

// Command-line front end. Everything goes through the public C API.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2tx/d2tx.h"

namespace {

struct Binding {
  std::string flag;
  std::string key;
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string description;
  std::vector<Binding> bindings;
};

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> specs = {
      {"convert",
       "Convert a native corpus file to canonical JSONL",
       {{"--input", "input", "Native corpus file"},
        {"--format", "format", "e2e, webnlg, enriched or canonical"},
        {"--output-dir", "output_dir", "Directory for corpus.jsonl and reports"},
        {"--split", "split", "Split assigned to the records (default train)"},
        {"--domain", "domain", "Domain label override"},
        {"--language", "language", "en or nl"},
        {"--skip-invalid", "skip_invalid", "true to skip unparseable records"}}},
      {"extend",
       "Extend the training split by augmentation or pseudo-labelling",
       {{"--input", "input", "Canonical corpus"},
        {"--method", "method", "none, dataug or pseulab"},
        {"--tier", "tier", "S, M, L or XL"},
        {"--output-dir", "output_dir", "Output directory"},
        {"--unlabeled", "unlabeled", "Unlabeled manifest (JSONL) for pseulab"},
        {"--threads", "threads", "Worker threads"},
        {"--extension-mode", "extension_mode", "documents or fraction"}}},
      {"eval",
       "Score outputs against the test split",
       {{"--which", "which", "quality, diversity or labels"},
        {"--input", "input", "Canonical corpus with the references"},
        {"--outputs", "outputs", "System outputs or label predictions (JSONL)"},
        {"--output-dir", "output_dir", "Directory for report files"}}},
      {"stats",
       "Statistics over error tables and ratings",
       {{"--test", "test", "chi, kappa, sf, likert or sample"},
        {"--table", "table", "Contingency table CSV"},
        {"--ratings", "ratings", "Ratings CSV"},
        {"--pool", "pool", "Candidate pool CSV for sampling"},
        {"--output-dir", "output_dir", "Directory for report files"}}},
      {"report",
       "Corpus statistics table for one or more corpora",
       {{"--input", "input", "Comma-separated canonical corpora"},
        {"--output-dir", "output_dir", "Directory for report files"}}},
  };
  return specs;
}

int report_failure(d2tx_status status) {
  std::cerr << "error: " << d2tx_last_error() << " (" << d2tx_status_name(status) << ")\n";
  return d2tx_exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d2tx: semi-supervised data-to-text corpus extension and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string seed;
  std::string bridge;
  bool mock_bridge = false;
  std::vector<std::string> settings;
  app.add_option("--config", config_path, "Flat key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every random choice");
  app.add_option("--bridge", bridge, "Adapter: mock, stdio:<command> or tcp:<host:port>");
  app.add_flag("--mock-bridge", mock_bridge, "Use the built-in deterministic mock adapter");
  app.add_option("--set", settings, "Extra setting as key=value (repeatable)");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::vector<std::string> sf_args;
  std::map<std::string, CLI::App*> subs;
  for (const auto& spec : commands()) {
    auto* sub = app.add_subcommand(spec.name, spec.description);
    subs[spec.name] = sub;
    for (const auto& b : spec.bindings) sub->add_option(b.flag, values[spec.name][b.key], b.help);
    if (spec.name == "stats") {
      sub->add_option("--sf", sf_args, "Chi-square statistic and degrees of freedom")
          ->expected(2);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  d2tx_config* config = nullptr;
  if (auto st = d2tx_config_new(&config); st != D2TX_OK) return report_failure(st);
  auto set = [&](const std::string& key, const std::string& value) {
    return d2tx_config_set(config, key.c_str(), value.c_str());
  };

  d2tx_status st = D2TX_OK;
  if (!config_path.empty()) st = d2tx_config_load_file(config, config_path.c_str());

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  if (st == D2TX_OK) {
    for (const auto& b : commands()) {
      if (b.name != command) continue;
      for (const auto& binding : b.bindings) {
        if (subs[command]->count(binding.flag) > 0) {
          st = set(binding.key, values[command][binding.key]);
          if (st != D2TX_OK) break;
        }
      }
    }
  }
  if (st == D2TX_OK && !sf_args.empty()) {
    st = set("test", "sf");
    if (st == D2TX_OK) st = set("x", sf_args[0]);
    if (st == D2TX_OK) st = set("df", sf_args[1]);
  }
  if (st == D2TX_OK && !seed.empty()) st = set("seed", seed);
  if (st == D2TX_OK && !bridge.empty()) st = set("bridge", bridge);
  if (st == D2TX_OK && mock_bridge) st = set("bridge", "mock");
  for (const auto& kv : settings) {
    if (st != D2TX_OK) break;
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      d2tx_config_free(config);
      return 1;
    }
    st = set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (st != D2TX_OK) {
    int code = report_failure(st);
    d2tx_config_free(config);
    return code;
  }

  d2tx_result* result = nullptr;
  st = d2tx_run(command.c_str(), config, &result);
  d2tx_config_free(config);
  if (st != D2TX_OK) return report_failure(st);
  std::cout << d2tx_result_output(result);
  for (size_t i = 0; i < d2tx_result_warning_count(result); ++i) {
    std::cerr << "warning: " << d2tx_result_warning(result, i) << "\n";
  }
  for (size_t i = 0; i < d2tx_result_file_count(result); ++i) {
    std::cerr << "wrote " << d2tx_result_file(result, i) << "\n";
  }
  d2tx_result_free(result);
  return 0;
}
