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

#include "d2tx/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "d2tx/augment.hpp"
#include "d2tx/bridge.hpp"
#include "d2tx/corpus.hpp"
#include "d2tx/corpus_io.hpp"
#include "d2tx/datalang.hpp"
#include "d2tx/diversity.hpp"
#include "d2tx/error.hpp"
#include "d2tx/external.hpp"
#include "d2tx/json.hpp"
#include "d2tx/pseudolabel.hpp"
#include "d2tx/quality.hpp"
#include "d2tx/stats.hpp"
#include "d2tx/text.hpp"

namespace d2tx::pipeline {

namespace fs = std::filesystem;
using corpus::Corpus;
using corpus::Instance;
using Rows = std::vector<std::vector<std::string>>;

// ---------------------------------------------------------------------------
// Config

namespace {

const std::set<std::string, std::less<>>& key_set() {
  static const std::set<std::string, std::less<>> keys = {
      "alpha",          "bonferroni",      "bridge",           "bridge_timeout",
      "cache_dir",      "df",              "domain",           "drop_empty_rows",
      "dropout",        "embed_baseline",  "extension_mode",   "format",
      "grammar_endpoint", "include_dev",   "input",            "label_value_tolerance",
      "language",       "max_slots",       "max_variants",     "method",
      "min_slots",      "mock_fixture",    "origin",           "output_dir",
      "outputs",        "per_cell",        "pool",             "pseulab_tier_docs",
      "rate_limit",     "ratings",         "seed",             "shape",
      "sim_threshold",  "skip_invalid",    "split",            "split_train",
      "summary_endpoint", "table",         "test",             "threads",
      "tier",           "unlabeled",       "which",            "x"};
  return keys;
}

}  // namespace

bool Config::is_known_key(std::string_view key) { return key_set().count(key) > 0; }

std::vector<std::string> Config::known_keys() { return {key_set().begin(), key_set().end()}; }

void Config::check_key(std::string_view key) const {
  if (!is_known_key(key)) throw ValidationError("unknown configuration key '" + std::string(key) + "'");
}

void Config::load_file(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config file '" + path.string() + "' does not exist");
  load_string(corpus::read_file(path), path.string());
}

void Config::load_string(std::string_view content, const std::string& origin) {
  std::size_t line_no = 0;
  for (const auto& raw : text::split(content, "\n")) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    auto key = text::trim(std::string_view(line).substr(0, eq));
    auto value = text::trim(std::string_view(line).substr(eq + 1));
    if (!is_known_key(key)) {
      throw ValidationError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    file_[key] = value;
  }
}

void Config::set(std::string_view key, std::string_view value) {
  check_key(key);
  overrides_[std::string(key)] = std::string(value);
}

bool Config::has(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> Config::get(std::string_view key) const {
  check_key(key);
  if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  if (auto it = file_.find(key); it != file_.end()) return it->second;
  return std::nullopt;
}

std::string Config::get_or(std::string_view key, std::string_view fallback) const {
  auto v = get(key);
  return v ? *v : std::string(fallback);
}

std::string Config::require(std::string_view key) const {
  auto v = get(key);
  if (!v || v->empty()) throw ValidationError("missing required setting '" + std::string(key) + "'");
  return *v;
}

long long Config::get_int(std::string_view key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    long long out = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ValidationError("setting '" + std::string(key) + "' must be an integer, got '" + *v + "'");
  }
}

double Config::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ValidationError("setting '" + std::string(key) + "' must be a number, got '" + *v + "'");
  }
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto s = text::to_lower(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("setting '" + std::string(key) + "' must be true or false, got '" + *v + "'");
}

// ---------------------------------------------------------------------------
// Formatting

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n\r") != std::string::npos) {
      out += '"';
      for (char ch : c) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    } else {
      out += c;
    }
  }
  return out + "\n";
}

std::string to_csv(const Rows& rows) {
  std::string out;
  for (const auto& r : rows) out += csv_line(r);
  return out;
}

std::string to_markdown(const Rows& rows) {
  if (rows.empty()) return "";
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    out += "|";
    for (const auto& c : r) out += " " + text::replace_all(c, "|", "\\|") + " |";
    out += "\n";
  };
  line(rows.front());
  out += "|";
  for (std::size_t i = 0; i < rows.front().size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

std::uint64_t require_seed(const Config& config) {
  auto raw = config.require("seed");
  long long v = config.get_int("seed", 0);
  if (v < 0) throw ValidationError("seed must be non-negative, got '" + raw + "'");
  return static_cast<std::uint64_t>(v);
}

fs::path require_existing(const Config& config, std::string_view key) {
  fs::path p = config.require(key);
  if (!fs::exists(p)) {
    throw ValidationError("setting '" + std::string(key) + "': path '" + p.string() + "' does not exist");
  }
  return p;
}

fs::path output_dir(const Config& config) { return config.require("output_dir"); }

void write_output(CommandResult& result, const fs::path& path, std::string_view content) {
  fs::create_directories(path.parent_path());
  corpus::write_file_atomic(path, content);
  result.written.push_back(path);
}

Corpus load_corpus(const fs::path& path) {
  auto c = corpus::read_canonical(path);
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

std::string corpus_name(const Corpus& c, const fs::path& path) {
  return c.name.empty() ? path.stem().string() : c.name;
}

corpus::Language config_language(const Config& config, corpus::Language fallback) {
  auto v = config.get("language");
  return v ? corpus::parse_language(*v) : fallback;
}

bridge::BridgeConfig bridge_config(const Config& config, corpus::Language language) {
  bridge::BridgeConfig bc;
  bridge::parse_bridge_spec(config.get_or("bridge", "mock"), bc);
  bc.timeout_seconds = config.get_double("bridge_timeout", bc.timeout_seconds);
  bc.dropout = config.get_double("dropout", bc.dropout);
  bc.language = language;
  bc.mock_seed = require_seed(config);
  bc.mock_fixture = config.get_or("mock_fixture", "");
  if (!bc.mock_fixture.empty() && !fs::exists(bc.mock_fixture)) {
    throw ValidationError("mock fixture '" + bc.mock_fixture + "' does not exist");
  }
  return bc;
}

external::HttpOptions http_options(const Config& config, const fs::path& default_cache) {
  external::HttpOptions o;
  o.limiter = std::make_shared<external::RateLimiter>(config.get_double("rate_limit", 1.0));
  o.cache_root = fs::path(config.get_or("cache_dir", default_cache.string()));
  return o;
}

corpus::CorpusStats split_stats(const Corpus& c, corpus::Split split) {
  Corpus view;
  for (const auto& inst : c.instances) {
    if (inst.split != split) continue;
    view.instances.push_back(inst);
    view.instances.back().split = corpus::Split::kTrain;
  }
  return corpus::corpus_stats(view);
}

std::vector<std::string> stats_row(const std::vector<std::string>& head,
                                   const corpus::CorpusStats& s) {
  auto row = head;
  row.push_back(std::to_string(s.instances));
  row.push_back(std::to_string(s.unique_mrs));
  row.push_back(std::to_string(s.tokens));
  return row;
}

std::string join_limited(const std::vector<std::string>& items, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  if (items.size() > limit) out += " and " + std::to_string(items.size() - limit) + " more";
  return out;
}

std::string warnings_section(const std::vector<std::string>& warnings) {
  if (warnings.empty()) return "";
  std::string out = "\n## Warnings\n\n";
  for (const auto& w : warnings) out += "- " + w + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Outputs aligned to reference groups

struct OutputLine {
  std::string id;
  std::string text;
};

std::vector<OutputLine> read_outputs(const fs::path& path) {
  std::vector<OutputLine> out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(corpus::read_file(path), "\n")) {
    ++line_no;
    if (text::trim(raw).empty()) continue;
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing string 'id'");
    }
    OutputLine o;
    o.id = j["id"].get<std::string>();
    if (j.contains("text") && j["text"].is_string()) o.text = j["text"].get<std::string>();
    out.push_back(std::move(o));
  }
  return out;
}

struct Aligned {
  std::vector<corpus::ReferenceGroup> groups;
  std::vector<std::string> outputs;  // parallel to groups
};

Aligned align_outputs(const Corpus& c, const std::vector<OutputLine>& outputs) {
  Aligned a;
  a.groups = corpus::group_references(c.in_split(corpus::Split::kTest));
  if (a.groups.empty()) throw ValidationError("corpus has no test instances");
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    for (const auto& id : a.groups[g].ids) by_id[id] = g;
  }
  std::vector<std::optional<std::string>> slot(a.groups.size());
  std::vector<std::string> unknown, duplicate;
  for (const auto& o : outputs) {
    auto it = by_id.find(o.id);
    if (it == by_id.end()) {
      unknown.push_back(o.id);
      continue;
    }
    if (slot[it->second]) {
      duplicate.push_back(o.id);
      continue;
    }
    slot[it->second] = o.text;
  }
  std::vector<std::string> missing;
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    if (!slot[g]) missing.push_back(a.groups[g].ids.front());
  }
  std::string problems;
  if (!unknown.empty()) problems += "unknown ids: " + join_limited(unknown) + ". ";
  if (!duplicate.empty()) {
    problems += "several outputs for one reference group: " + join_limited(duplicate) + ". ";
  }
  if (!missing.empty()) problems += "no output for test instances: " + join_limited(missing) + ".";
  if (!problems.empty()) throw ValidationError("outputs do not align with the test split: " + problems);
  for (auto& s : slot) a.outputs.push_back(*s);
  return a;
}

// Verbalizes every test reference group through the bridge.
Aligned generate_outputs(const Corpus& c, bridge::BridgeClient& client) {
  Aligned a;
  a.groups = corpus::group_references(c.in_split(corpus::Split::kTest));
  if (a.groups.empty()) throw ValidationError("corpus has no test instances");
  for (const auto& g : a.groups) {
    a.outputs.push_back(
        client.request_translation(datalang::make_verbalize_prompt(datalang::serialize_mr(g.mr))));
  }
  return a;
}

std::string outputs_jsonl(const Aligned& a) {
  std::string out;
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    Json j;
    j["id"] = a.groups[g].ids.front();
    j["text"] = a.outputs[g];
    out += j.dump() + "\n";
  }
  return out;
}

Aligned outputs_for_eval(const Config& config, const Corpus& c, bridge::BridgeClient* client,
                         CommandResult& result) {
  if (config.has("outputs")) return align_outputs(c, read_outputs(require_existing(config, "outputs")));
  if (!client) throw ValidationError("missing required setting 'outputs'");
  auto a = generate_outputs(c, *client);
  if (config.has("output_dir")) write_output(result, output_dir(config) / "outputs.jsonl", outputs_jsonl(a));
  return a;
}

// ---------------------------------------------------------------------------
// convert

CommandResult convert(const Config& config) {
  CommandResult result;
  auto input = require_existing(config, "input");
  auto format = corpus::parse_native_format(config.require("format"));
  auto out_dir = output_dir(config);
  corpus::NativeOptions opts;
  opts.split = corpus::parse_split(config.get_or("split", "train"));
  opts.domain = config.get_or("domain", "");
  opts.language = config_language(config, corpus::Language::kEn);

  Corpus c;
  if (format == corpus::NativeFormat::kCanonical) {
    c = load_corpus(input);
  } else {
    auto load = corpus::read_native(input, format, opts);
    if (!load.issues.empty()) {
      std::vector<std::string> listed;
      for (const auto& i : load.issues) listed.push_back("line " + std::to_string(i.line) + ": " + i.message);
      if (!config.get_bool("skip_invalid", false)) {
        std::string msg = "failed to parse " + std::to_string(load.issues.size()) + " record(s) in '" +
                          input.string() + "':";
        for (const auto& l : listed) msg += "\n  " + l;
        throw ValidationError(msg);
      }
      for (auto& l : listed) result.warnings.push_back("skipped " + l);
    }
    c = std::move(load.corpus);
  }
  c.name = input.stem().string();
  if (c.instances.empty()) result.warnings.push_back("input '" + input.string() + "' contains no instances");

  write_output(result, out_dir / "corpus.jsonl", corpus::canonical_string(c));
  Rows rows{{"split", "instances", "unique_mrs", "tokens"}};
  for (auto s : {corpus::Split::kTrain, corpus::Split::kDev, corpus::Split::kTest}) {
    rows.push_back(stats_row({std::string(corpus::to_string(s))}, split_stats(c, s)));
  }
  write_output(result, out_dir / "report.csv", to_csv(rows));
  write_output(result, out_dir / "report.md",
               "# Conversion of " + input.filename().string() + "\n\n" + to_markdown(rows) +
                   warnings_section(result.warnings));
  result.output = to_csv(rows);
  return result;
}

// ---------------------------------------------------------------------------
// extend

std::vector<pseudolabel::SourceText> read_unlabeled(const fs::path& path, corpus::Language language,
                                                    const Config& config, const fs::path& out_dir,
                                                    std::vector<std::string>& warnings) {
  std::vector<pseudolabel::SourceText> texts;
  std::unique_ptr<external::SummaryClient> summaries;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(corpus::read_file(path), "\n")) {
    ++line_no;
    if (text::trim(raw).empty()) continue;
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    std::string where = path.string() + ":" + std::to_string(line_no);
    std::string document = j.value("document", "");
    std::string body;
    if (j.contains("text") && j["text"].is_string()) {
      body = j["text"].get<std::string>();
    } else if (j.contains("title") && j["title"].is_string()) {
      if (!summaries) {
        summaries = std::make_unique<external::SummaryClient>(config.require("summary_endpoint"),
                                                              http_options(config, out_dir / "cache"));
      }
      try {
        body = summaries->fetch(j["title"].get<std::string>()).first_paragraph;
      } catch (const NotFoundError& e) {
        warnings.push_back(where + ": " + e.what());
        continue;
      }
      if (document.empty()) document = j["title"].get<std::string>();
    } else {
      throw ParseError(where + ": expected a 'text' or 'title' field");
    }
    if (document.empty()) document = "doc" + std::to_string(line_no);
    for (auto& s : external::split_sentences(body, language)) texts.push_back({document, std::move(s)});
  }
  return texts;
}

std::optional<std::array<std::size_t, 4>> tier_documents(const Config& config) {
  auto v = config.get("pseulab_tier_docs");
  if (!v) return std::nullopt;
  auto parts = text::split(*v, ",");
  if (parts.size() != 4) throw ValidationError("pseulab_tier_docs needs four comma-separated counts");
  std::array<std::size_t, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    try {
      out[i] = static_cast<std::size_t>(std::stoull(text::trim(parts[i])));
    } catch (const std::exception&) {
      throw ValidationError("pseulab_tier_docs: '" + parts[i] + "' is not a count");
    }
  }
  return out;
}

CommandResult extend(const Config& config) {
  CommandResult result;
  auto input = require_existing(config, "input");
  auto method = config.require("method");
  if (method != "none" && method != "dataug" && method != "pseulab") {
    throw ValidationError("method must be none, dataug or pseulab, got '" + method + "'");
  }
  auto out_dir = output_dir(config);
  auto tier = augment::parse_tier(config.get_or("tier", "S"));
  auto threads = static_cast<std::size_t>(std::max<long long>(1, config.get_int("threads", 1)));
  Corpus original = load_corpus(input);
  std::string name = corpus_name(original, input);
  std::string tier_label = method == "none" ? "" : std::string(augment::to_string(tier));

  Rows counts{{"dataset", "method", "tier", "instances", "unique_mrs", "tokens"}};
  counts.push_back(stats_row({name, "none", ""}, corpus::corpus_stats(original)));

  if (method == "none") {
    require_seed(config);
    write_output(result, out_dir / "corpus.jsonl", corpus::read_file(input));
    write_output(result, out_dir / "report.csv", to_csv(counts));
    write_output(result, out_dir / "report.md", "# Extension of " + name + "\n\n" + to_markdown(counts));
    result.output = to_csv(counts);
    return result;
  }

  auto language = original.language;
  auto bc = bridge_config(config, language);
  auto factory = bridge::make_factory(bc);
  // Probe the bridge before anything is written.
  std::unique_ptr<bridge::BridgeClient> probe;
  try {
    probe = factory();
    if (method == "dataug") {
      probe->request_embedding({"probe"});
    } else {
      probe->request_translation(datalang::make_labeling_prompt(language, "Probe."));
    }
  } catch (const Error& e) {
    throw BridgeError(std::string("bridge unavailable: ") + e.what());
  }

  Corpus extended;
  std::string details;
  Rows qa_rows;
  if (method == "dataug") {
    augment::AugmentOptions ao;
    ao.tier = tier;
    ao.max_variants = static_cast<std::size_t>(config.get_int("max_variants", static_cast<long long>(augment::kMaxVariants)));
    ao.threshold = config.get_double("sim_threshold", augment::kSimThreshold);
    ao.threads = threads;
    auto ar = augment::tiered_augment(original, ao, factory);
    extended = std::move(ar.corpus);
    for (const auto& m : ar.failure_messages) result.warnings.push_back(m);
    if (ar.untagged) result.warnings.push_back(std::to_string(ar.untagged) + " train instances have no POS tags and were not augmented");

    std::vector<augment::QaPair> pairs;
    for (const auto& p : ar.pairs) {
      const auto& src = original.instances[p.source_index];
      pairs.push_back({src.domain, src.language, src.text, extended.instances[p.output_index].text});
    }
    std::unique_ptr<external::GrammarClient> grammar;
    if (auto ep = config.get("grammar_endpoint")) {
      grammar = std::make_unique<external::GrammarClient>(*ep, http_options(config, out_dir / "cache"));
    }
    augment::QaOptions qo;
    qo.bridge = probe.get();
    if (config.has("embed_baseline")) qo.embed_baseline = config.get_double("embed_baseline", 0.0);
    qo.grammar = grammar.get();
    qa_rows.push_back({"domain", "pairs", "BLEU", "BertScore", "grammar_delta"});
    if (!pairs.empty()) {
      for (const auto& r : augment::augmentation_report(pairs, qo)) {
        qa_rows.push_back({r.domain, std::to_string(r.pairs), format_fixed(r.bleu, 2),
                           r.embed_f1 ? format_fixed(*r.embed_f1, 2) : "",
                           r.grammar_delta ? format_fixed(*r.grammar_delta, 2) : ""});
        if (r.grammar_skipped) {
          result.warnings.push_back(r.domain + ": " + std::to_string(r.grammar_skipped) + " grammar checks skipped");
        }
      }
    }
    details = "\n## Augmentation\n\n" + to_markdown(Rows{
        {"train_instances", "variants", "without_variants", "untagged", "failures"},
        {std::to_string(original.count(corpus::Split::kTrain)), std::to_string(ar.pairs.size()),
         std::to_string(ar.without_variants), std::to_string(ar.untagged), std::to_string(ar.bridge_failures)}});
    details += "\n## Variant quality\n\n" + to_markdown(qa_rows);
  } else {
    auto unlabeled = require_existing(config, "unlabeled");
    auto texts = read_unlabeled(unlabeled, language, config, out_dir, result.warnings);
    pseudolabel::LabelOptions lo;
    lo.language = language;
    lo.shape = config.has("shape") ? corpus::parse_shape(config.require("shape"))
               : original.instances.empty() ? corpus::MrShape::kKeyValue
                                            : original.instances.front().mr.shape();
    lo.origin = config.get_or("origin", unlabeled.stem().string());
    lo.threads = threads;
    auto batch = pseudolabel::label_texts(texts, lo, factory);
    for (const auto& w : batch.warnings) result.warnings.push_back(w);
    pseudolabel::ExtensionOptions eo;
    eo.tier = tier;
    auto mode = config.get_or("extension_mode", "documents");
    if (mode == "documents") {
      eo.mode = pseudolabel::ExtensionMode::kDocuments;
    } else if (mode == "fraction") {
      eo.mode = pseudolabel::ExtensionMode::kFraction;
    } else {
      throw ValidationError("extension_mode must be documents or fraction, got '" + mode + "'");
    }
    eo.tier_documents = tier_documents(config);
    eo.split_train = config.get_bool("split_train", true);
    eo.domain = config.get_or("domain", "");
    auto er = pseudolabel::assemble_extension(original, batch, eo);
    extended = std::move(er.corpus);
    for (const auto& w : er.warnings) result.warnings.push_back(w);
    details = "\n## Pseudo-labelling\n\n" + to_markdown(Rows{
        {"sentences", "labeled", "documents_used", "added", "empty_excluded", "duplicates", "bridge_failures"},
        {std::to_string(texts.size()), std::to_string(batch.items.size()), std::to_string(er.documents_used),
         std::to_string(er.added), std::to_string(er.empty_excluded), std::to_string(er.duplicates),
         std::to_string(batch.bridge_failures)}});
  }
  extended.name = name;
  counts.push_back(stats_row({name, method, tier_label}, corpus::corpus_stats(extended)));

  write_output(result, out_dir / "corpus.jsonl", corpus::canonical_string(extended));
  write_output(result, out_dir / "report.csv", to_csv(counts));
  if (!qa_rows.empty()) write_output(result, out_dir / "qa.csv", to_csv(qa_rows));
  write_output(result, out_dir / "report.md",
               "# Extension of " + name + "\n\n" + to_markdown(counts) + details +
                   warnings_section(result.warnings));
  result.output = to_csv(counts);
  return result;
}

// ---------------------------------------------------------------------------
// eval

std::vector<std::string> domain_order(const Aligned& a) {
  std::vector<std::string> order;
  for (const auto& g : a.groups) {
    const auto& d = g.members.front()->domain;
    if (std::find(order.begin(), order.end(), d) == order.end()) order.push_back(d);
  }
  return order;
}

CommandResult eval_quality(const Config& config, const Corpus& c, const std::string& name) {
  CommandResult result;
  std::unique_ptr<bridge::BridgeClient> client;
  if (config.has("bridge") || !config.has("outputs")) client = bridge::connect(bridge_config(config, c.language));
  auto a = outputs_for_eval(config, c, client.get(), result);
  auto stemmer = quality::make_stemmer(c.language);
  quality::MeteorOptions mo;
  mo.stemmer = stemmer.get();
  quality::EmbedOptions eo;
  eo.language = c.language;
  if (config.has("embed_baseline")) eo.baseline = config.get_double("embed_baseline", 0.0);

  Rows rows{{"dataset", "domain", "method", "tier", "BLEU", "NIST", "BertScore", "METEOR", "ROUGE-L"}};
  auto order = domain_order(a);
  if (order.size() > 1) order.push_back("");
  for (const auto& domain : order) {
    std::vector<quality::EvalPair> pairs;
    for (std::size_t g = 0; g < a.groups.size(); ++g) {
      if (!domain.empty() && a.groups[g].members.front()->domain != domain) continue;
      quality::EvalPair p;
      p.candidate = corpus::tokenize(a.outputs[g], c.language);
      for (const auto& t : a.groups[g].texts) p.references.push_back(corpus::tokenize(t, c.language));
      pairs.push_back(std::move(p));
    }
    std::string embed;
    if (client) embed = format_fixed(100.0 * quality::embed_score(pairs, *client, eo).f1, 2);
    double nist = 0.0;
    try {
      nist = quality::nist(pairs);
    } catch (const InvalidArgument&) {
      nist = 0.0;  // every candidate empty
    }
    rows.push_back({name, domain.empty() ? "all" : domain, config.get_or("method", "none"),
                    config.get_or("tier", ""), format_fixed(quality::bleu(pairs), 2), format_fixed(nist, 4),
                    embed, format_fixed(quality::meteor(pairs, mo), 4), format_fixed(quality::rouge_l(pairs), 4)});
  }
  if (config.has("output_dir")) {
    auto out = output_dir(config);
    write_output(result, out / "report.csv", to_csv(rows));
    write_output(result, out / "report.md", "# Quality of " + name + "\n\n" + to_markdown(rows) +
                                                warnings_section(result.warnings));
  }
  result.output = to_csv(rows);
  return result;
}

CommandResult eval_diversity(const Config& config, const Corpus& c, const std::string& name) {
  CommandResult result;
  std::unique_ptr<bridge::BridgeClient> client;
  if (!config.has("outputs")) client = bridge::connect(bridge_config(config, c.language));
  auto a = outputs_for_eval(config, c, client.get(), result);
  diversity::DiversityInput in;
  in.language = c.language;
  in.outputs = a.outputs;
  for (const auto& inst : c.instances) {
    if (inst.split != corpus::Split::kTest) in.pool.push_back(inst.text);
  }
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    auto out_tokens = corpus::tokenize(a.outputs[g], c.language);
    for (const auto* m : a.groups[g].members) {
      if (m->pos.empty()) continue;
      in.recall_pairs.push_back({out_tokens, corpus::tokenize(m->text, m->language), m->pos});
    }
  }
  auto r = diversity::diversity_report(in);
  result.warnings = r.warnings;
  Rows rows{{"dataset", "method", "tier", "ASL", "SDSL", "Types", "TTR1", "TTR2", "%Novel", "Cov", "Nov", "Loc1"},
            {name, config.get_or("method", "none"), config.get_or("tier", ""), format_fixed(r.asl, 2),
             format_fixed(r.sdsl, 2), std::to_string(r.types), format_fixed(r.ttr1, 2), format_fixed(r.ttr2, 2),
             format_fixed(100.0 * r.pct_novel, 2), format_fixed(r.coverage, 2), format_fixed(r.novelty, 2),
             r.local_recall ? format_fixed(*r.local_recall, 2) : ""}};
  if (config.has("output_dir")) {
    auto out = output_dir(config);
    write_output(result, out / "report.csv", to_csv(rows));
    write_output(result, out / "report.md", "# Diversity of " + name + "\n\n" + to_markdown(rows) +
                                                warnings_section(result.warnings));
  }
  result.output = to_csv(rows);
  return result;
}

CommandResult eval_labels(const Config& config, const Corpus& c, const std::string& name) {
  CommandResult result;
  std::unordered_map<std::string, const Instance*> gold;
  std::vector<const Instance*> order;
  for (const auto& inst : c.instances) {
    if (inst.split == corpus::Split::kTrain) continue;
    gold[inst.id] = &inst;
    order.push_back(&inst);
  }
  if (order.empty()) throw ValidationError("corpus has no dev or test instances to score labels against");

  std::vector<std::pair<const Instance*, corpus::MR>> scored;
  if (config.has("outputs")) {
    auto path = require_existing(config, "outputs");
    std::vector<std::string> unknown;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(corpus::read_file(path), "\n")) {
      ++line_no;
      if (text::trim(raw).empty()) continue;
      Json j;
      try {
        j = Json::parse(raw);
      } catch (const std::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      auto id = j.value("id", "");
      auto it = gold.find(id);
      if (it == gold.end()) {
        unknown.push_back(id.empty() ? "line " + std::to_string(line_no) : id);
        continue;
      }
      corpus::MR mr;
      if (j.contains("mr")) {
        mr = corpus::mr_from_json(j["mr"]);
      } else if (j.contains("datastring") && j["datastring"].is_string()) {
        try {
          mr = datalang::parse_datalang(j["datastring"].get<std::string>(), it->second->mr.shape()).mr;
        } catch (const ParseError& e) {
          result.warnings.push_back(id + ": " + e.what() + "; scored as empty");
        }
      } else {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 'mr' or 'datastring'");
      }
      scored.emplace_back(it->second, std::move(mr));
    }
    if (!unknown.empty()) throw ValidationError("predictions name unknown dev/test ids: " + join_limited(unknown));
  } else {
    auto client = bridge::connect(bridge_config(config, c.language));
    for (const auto* inst : order) {
      corpus::MR mr;
      auto reply = client->request_translation(datalang::make_labeling_prompt(inst->language, inst->text));
      try {
        mr = datalang::parse_datalang(reply, inst->mr.shape()).mr;
      } catch (const ParseError& e) {
        result.warnings.push_back(inst->id + ": " + e.what() + "; scored as empty");
      }
      scored.emplace_back(inst, std::move(mr));
    }
  }

  pseudolabel::MatchOptions mo;
  if (config.has("label_value_tolerance")) {
    mo.value_tolerance = static_cast<std::size_t>(std::max<long long>(0, config.get_int("label_value_tolerance", 0)));
  }
  std::vector<std::string> domains;
  for (const auto& [inst, mr] : scored) {
    if (std::find(domains.begin(), domains.end(), inst->domain) == domains.end()) domains.push_back(inst->domain);
  }
  if (domains.size() > 1) domains.push_back("");
  Rows rows{{"dataset", "domain", "dev_P", "dev_R", "dev_F1", "test_P", "test_R", "test_F1"}};
  for (const auto& d : domains) {
    std::vector<std::string> row{name, d.empty() ? "all" : d};
    for (auto split : {corpus::Split::kDev, corpus::Split::kTest}) {
      std::vector<corpus::MR> pred, gold_mrs;
      for (const auto& [inst, mr] : scored) {
        if (inst->split != split || (!d.empty() && inst->domain != d)) continue;
        pred.push_back(mr);
        gold_mrs.push_back(inst->mr);
      }
      if (pred.empty()) {
        row.insert(row.end(), {"", "", ""});
        continue;
      }
      auto s = pseudolabel::eval_labels(pred, gold_mrs, mo);
      row.push_back(format_fixed(100.0 * s.precision, 2));
      row.push_back(format_fixed(100.0 * s.recall, 2));
      row.push_back(format_fixed(100.0 * s.f1, 2));
    }
    rows.push_back(std::move(row));
  }
  if (config.has("output_dir")) {
    auto out = output_dir(config);
    write_output(result, out / "report.csv", to_csv(rows));
    write_output(result, out / "report.md", "# Label quality on " + name + "\n\n" + to_markdown(rows) +
                                                warnings_section(result.warnings));
  }
  result.output = to_csv(rows);
  return result;
}

CommandResult eval(const Config& config) {
  auto which = config.require("which");
  require_seed(config);
  auto input = require_existing(config, "input");
  auto c = load_corpus(input);
  auto name = corpus_name(c, input);
  if (which == "quality") return eval_quality(config, c, name);
  if (which == "diversity") return eval_diversity(config, c, name);
  if (which == "labels") return eval_labels(config, c, name);
  throw ValidationError("which must be quality, diversity or labels, got '" + which + "'");
}

// ---------------------------------------------------------------------------
// stats

std::vector<corpus::CsvRow> read_csv_file(const fs::path& path, std::size_t min_columns) {
  auto rows = corpus::parse_csv(corpus::read_file(path));
  while (!rows.empty() && rows.back().fields.size() == 1 && text::trim(rows.back().fields[0]).empty()) {
    rows.pop_back();
  }
  if (rows.empty()) throw ParseError("'" + path.string() + "' is empty");
  for (const auto& r : rows) {
    if (r.fields.size() != rows.front().fields.size()) {
      throw ParseError(path.string() + ":" + std::to_string(r.line) + ": expected " +
                       std::to_string(rows.front().fields.size()) + " columns");
    }
  }
  if (rows.front().fields.size() < min_columns) {
    throw ParseError("'" + path.string() + "' needs at least " + std::to_string(min_columns) + " columns");
  }
  return rows;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(text::trim(s), &used);
    if (used != text::trim(s).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

CommandResult stats_chi(const Config& config) {
  CommandResult result;
  auto path = require_existing(config, "table");
  auto rows = read_csv_file(path, 3);
  const auto& header = rows.front().fields;
  bool grouped = text::to_lower(text::trim(header[0])) == "table";
  std::size_t first = grouped ? 2 : 1;
  if (header.size() < first + 2) throw ParseError("'" + path.string() + "' needs at least two method columns");
  std::vector<std::string> methods;
  for (std::size_t i = first; i < header.size(); ++i) methods.push_back(text::trim(header[i]));

  std::vector<std::string> order;
  std::map<std::string, stats::ContingencyTable> tables;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    std::string tname = grouped ? text::trim(f[0]) : "table";
    if (!tables.count(tname)) {
      order.push_back(tname);
      tables[tname].col_labels = methods;
    }
    auto& t = tables[tname];
    t.row_labels.push_back(text::trim(f[first - 1]));
    std::vector<double> counts;
    for (std::size_t i = first; i < f.size(); ++i) counts.push_back(parse_number(f[i], path, rows[r].line));
    t.counts.push_back(std::move(counts));
  }
  stats::ChiSquareOptions co;
  co.drop_empty_rows = config.get_bool("drop_empty_rows", false);
  double alpha = config.get_double("alpha", 0.05);
  bool bonferroni = config.get_bool("bonferroni", true);

  Rows cells{{"table", "category"}};
  for (const auto& m : methods) {
    cells.front().push_back(m);
    cells.front().push_back(m + "_letters");
  }
  Rows tests{{"table", "chi2", "df", "p", "dropped_rows"}};
  for (const auto& tname : order) {
    const auto& t = tables[tname];
    auto chi = stats::chi_square(t, co);
    std::string dropped;
    for (const auto& d : chi.dropped_rows) dropped += (dropped.empty() ? "" : ";") + d;
    tests.push_back({tname, format_fixed(chi.chi2, 4), std::to_string(chi.df), format_fixed(chi.p, 5), dropped});
    auto letters = stats::pairwise_column_z(t, alpha, bonferroni);
    for (std::size_t r = 0; r < t.counts.size(); ++r) {
      std::vector<std::string> row{tname, t.row_labels[r]};
      for (std::size_t c = 0; c < methods.size(); ++c) {
        row.push_back(format_fixed(t.counts[r][c], 0));
        row.push_back(letters[r].letters[c]);
      }
      cells.push_back(std::move(row));
    }
  }
  if (config.has("output_dir")) {
    auto out = output_dir(config);
    write_output(result, out / "report.csv", to_csv(cells));
    write_output(result, out / "chi_square.csv", to_csv(tests));
    write_output(result, out / "report.md", "# Error analysis\n\n" + to_markdown(tests) + "\n" + to_markdown(cells));
  }
  result.output = to_csv(tests);
  return result;
}

CommandResult stats_kappa(const Config& config) {
  CommandResult result;
  auto path = require_existing(config, "ratings");
  auto rows = read_csv_file(path, 3);
  std::size_t raters = rows.front().fields.size() - 1;
  stats::RatingMatrix m(raters);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < raters; ++k) m[k].push_back(text::trim(rows[r].fields[k + 1]));
  }
  if (rows.size() < 2) throw ParseError("'" + path.string() + "' has no items");
  double kappa = stats::multi_kappa(m);
  Rows out{{"raters", "items", "kappa"}, {std::to_string(raters), std::to_string(rows.size() - 1), format_fixed(kappa, 4)}};
  if (config.has("output_dir")) {
    write_output(result, output_dir(config) / "report.csv", to_csv(out));
    write_output(result, output_dir(config) / "report.md", "# Agreement\n\n" + to_markdown(out));
  }
  result.output = to_csv(out);
  return result;
}

CommandResult stats_sf(const Config& config) {
  CommandResult result;
  double x = config.get_double("x", 0.0);
  config.require("x");
  config.require("df");
  auto df = config.get_int("df", 1);
  if (df < 1 || df > 100000) throw ValidationError("df must be a positive integer");
  double p = stats::chi_square_sf(x, static_cast<int>(df));
  Rows out{{"chi2", "df", "p"}, {format_fixed(x, 4), std::to_string(df), format_fixed(p, 5)}};
  result.output = to_csv(out);
  if (config.has("output_dir")) write_output(result, output_dir(config) / "report.csv", result.output);
  return result;
}

CommandResult stats_likert(const Config& config) {
  CommandResult result;
  auto path = require_existing(config, "ratings");
  auto rows = read_csv_file(path, 4);
  std::vector<stats::LikertRating> ratings;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    ratings.push_back({text::trim(f[0]), text::trim(f[1]), text::to_lower(text::trim(f[2])),
                       parse_number(f[3], path, rows[r].line)});
  }
  auto criteria = stats::default_criteria();
  auto report = stats::likert_descriptives(ratings, criteria);
  result.warnings = report.warnings;
  Rows out{{"dataset", "method"}};
  for (const auto& c : criteria) {
    out.front().push_back(c.name + "_mean");
    out.front().push_back(c.name + "_sd");
  }
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& cell : report.cells) {
    std::pair<std::string, std::string> k{cell.dataset, cell.method};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  for (const auto& [d, m] : keys) {
    std::vector<std::string> row{d, m};
    for (const auto& c : criteria) {
      auto it = std::find_if(report.cells.begin(), report.cells.end(), [&](const stats::LikertCell& x) {
        return x.dataset == d && x.method == m && x.criterion == c.name;
      });
      if (it == report.cells.end()) {
        row.insert(row.end(), {"", ""});
      } else {
        row.push_back(format_fixed(it->mean, 2));
        row.push_back(it->sd ? format_fixed(*it->sd, 2) : "");
      }
    }
    out.push_back(std::move(row));
  }
  if (config.has("output_dir")) {
    write_output(result, output_dir(config) / "report.csv", to_csv(out));
    write_output(result, output_dir(config) / "report.md",
                 "# Human evaluation\n\n" + to_markdown(out) + warnings_section(result.warnings));
  }
  result.output = to_csv(out);
  return result;
}

CommandResult stats_sample(const Config& config) {
  CommandResult result;
  auto path = require_existing(config, "pool");
  auto rows = read_csv_file(path, 4);
  std::vector<stats::EvalCandidate> pool;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    double slots = parse_number(f[3], path, rows[r].line);
    if (slots < 0 || slots != std::floor(slots)) throw ParseError(path.string() + ":" + std::to_string(rows[r].line) + ": slot count must be a whole number");
    pool.push_back({text::trim(f[0]), text::trim(f[1]), text::trim(f[2]), static_cast<std::size_t>(slots)});
  }
  stats::SampleOptions so;
  so.seed = require_seed(config);
  so.per_cell = static_cast<std::size_t>(std::max<long long>(0, config.get_int("per_cell", 40)));
  so.min_slots = static_cast<std::size_t>(std::max<long long>(0, config.get_int("min_slots", 2)));
  so.max_slots = static_cast<std::size_t>(std::max<long long>(0, config.get_int("max_slots", 6)));
  auto s = stats::sample_eval_items(pool, so);
  result.warnings = s.warnings;
  Rows out{{"id", "method", "domain", "slots"}};
  for (const auto& it : s.items) out.push_back({it.id, it.method, it.domain, std::to_string(it.slot_count)});
  if (config.has("output_dir")) write_output(result, output_dir(config) / "manifest.csv", to_csv(out));
  result.output = to_csv(out);
  return result;
}

CommandResult stats(const Config& config) {
  auto test = config.require("test");
  if (test == "chi") return stats_chi(config);
  if (test == "kappa") return stats_kappa(config);
  if (test == "sf") return stats_sf(config);
  if (test == "likert") return stats_likert(config);
  if (test == "sample") return stats_sample(config);
  throw ValidationError("test must be chi, kappa, sf, likert or sample, got '" + test + "'");
}

// ---------------------------------------------------------------------------
// report

CommandResult report(const Config& config) {
  CommandResult result;
  auto inputs = text::split(config.require("input"), ",");
  bool include_dev = config.get_bool("include_dev", false);
  Rows rows{{"dataset", "domain", "method", "tier", "instances", "unique_mrs", "tokens"}};
  for (const auto& raw : inputs) {
    fs::path p = text::trim(raw);
    if (!fs::exists(p)) throw ValidationError("corpus '" + p.string() + "' does not exist");
    auto c = load_corpus(p);
    std::string method = "none", tier;
    std::set<std::string> domains;
    for (const auto& inst : c.instances) {
      if (inst.split == corpus::Split::kTrain) domains.insert(inst.domain);
      if (inst.provenance) {
        method = inst.provenance->method;
        tier = inst.provenance->tier;
      }
    }
    std::string domain;
    for (const auto& d : domains) domain += (domain.empty() ? "" : ";") + d;
    rows.push_back(stats_row({corpus_name(c, p), domain, method, tier}, corpus::corpus_stats(c, include_dev)));
  }
  if (config.has("output_dir")) {
    write_output(result, output_dir(config) / "report.csv", to_csv(rows));
    write_output(result, output_dir(config) / "report.md", "# Corpus statistics\n\n" + to_markdown(rows));
  }
  result.output = to_csv(rows);
  return result;
}

}  // namespace

CommandResult cmd_convert(const Config& config) { return convert(config); }
CommandResult cmd_extend(const Config& config) { return extend(config); }
CommandResult cmd_eval(const Config& config) { return eval(config); }
CommandResult cmd_stats(const Config& config) { return stats(config); }
CommandResult cmd_report(const Config& config) { return report(config); }

CommandResult run_command(std::string_view command, const Config& config) {
  if (command == "convert") return cmd_convert(config);
  if (command == "extend") return cmd_extend(config);
  if (command == "eval") return cmd_eval(config);
  if (command == "stats") return cmd_stats(config);
  if (command == "report") return cmd_report(config);
  throw InvalidArgument("unknown command '" + std::string(command) + "'");
}

}  // namespace d2tx::pipeline
