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

#include "d2tx/corpus_io.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::corpus {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

Json mr_to_json(const MR& mr) {
  Json slots = Json::array();
  for (std::size_t i = 0; i < mr.size(); ++i) slots.push_back(mr.components(i));
  return Json{{"shape", std::string(to_string(mr.shape()))}, {"slots", slots}};
}

MR mr_from_json(const Json& j) {
  auto shape = parse_shape(j.at("shape").get<std::string>());
  const auto& slots = j.at("slots");
  if (!slots.is_array()) throw ParseError("mr.slots must be an array");
  if (shape == MrShape::kKeyValue) {
    std::vector<Slot> out;
    for (const auto& s : slots) {
      if (!s.is_array() || s.size() != 2) throw ParseError("kv slot must have 2 components");
      out.push_back({s[0].get<std::string>(), s[1].get<std::string>()});
    }
    return MR(std::move(out));
  }
  std::vector<Triple> out;
  for (const auto& s : slots) {
    if (!s.is_array() || s.size() != 3) throw ParseError("triple must have 3 components");
    out.push_back({s[0].get<std::string>(), s[1].get<std::string>(), s[2].get<std::string>()});
  }
  return MR(std::move(out));
}

Json instance_to_json(const Instance& instance) {
  Json spans = Json::array();
  for (const auto& s : instance.spans) {
    spans.push_back({s.slot_index, text::byte_to_codepoint(instance.text, s.begin),
                     text::byte_to_codepoint(instance.text, s.end)});
  }
  Json j;
  j["id"] = instance.id;
  j["mr"] = mr_to_json(instance.mr);
  j["text"] = instance.text;
  j["spans"] = spans;
  j["language"] = std::string(to_string(instance.language));
  j["domain"] = instance.domain;
  j["split"] = std::string(to_string(instance.split));
  if (!instance.pos.empty()) j["pos"] = instance.pos;
  if (instance.provenance) {
    const auto& p = *instance.provenance;
    Json prov;
    prov["method"] = p.method;
    prov["tier"] = p.tier;
    if (p.method == "dataug") prov["rank"] = p.rank;
    if (!p.origin.empty()) prov["origin"] = p.origin;
    j["provenance"] = prov;
  }
  return j;
}

Instance instance_from_json(const Json& j, std::size_t line) {
  try {
    Instance i;
    i.id = j.contains("id") ? j.at("id").get<std::string>() : "L" + std::to_string(line);
    i.mr = mr_from_json(j.at("mr"));
    i.text = j.at("text").get<std::string>();
    if (j.contains("spans")) {
      for (const auto& s : j.at("spans")) {
        if (!s.is_array() || s.size() != 3) throw ParseError("span must be [slot, start, end]");
        auto slot = s[0].get<std::size_t>();
        auto b = s[1].get<std::size_t>();
        auto e = s[2].get<std::size_t>();
        if (e > text::codepoint_count(i.text) || b >= e) {
          throw ValidationError("span [" + std::to_string(b) + ", " + std::to_string(e) +
                                ") out of range");
        }
        i.spans.push_back({slot, text::codepoint_to_byte(i.text, b),
                           text::codepoint_to_byte(i.text, e)});
      }
    }
    i.language = parse_language(j.value("language", std::string("en")));
    i.domain = j.value("domain", std::string());
    i.split = parse_split(j.value("split", std::string("train")));
    if (j.contains("pos")) i.pos = j.at("pos").get<std::vector<std::string>>();
    if (j.contains("provenance")) {
      const auto& p = j.at("provenance");
      Provenance prov;
      prov.method = p.value("method", std::string());
      prov.tier = p.value("tier", std::string());
      prov.rank = p.value("rank", 0);
      prov.origin = p.value("origin", std::string());
      i.provenance = prov;
    }
    validate_instance(i);
    return i;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
}

std::string to_canonical_line(const Instance& instance) {
  return instance_to_json(instance).dump(-1, ' ', false,
                                         nlohmann::json::error_handler_t::strict);
}

Corpus read_canonical_string(std::string_view content, std::string name) {
  Corpus corpus;
  corpus.name = std::move(name);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto nl = content.find('\n', start);
    auto line = content.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                   : nl - start);
    ++line_no;
    if (!text::trim(line).empty()) {
      Json j;
      try {
        j = Json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
      corpus.instances.push_back(instance_from_json(j, line_no));
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!corpus.instances.empty()) {
    corpus.language = corpus.instances.front().language;
    corpus.domain = corpus.instances.front().domain;
  }
  return corpus;
}

Corpus read_canonical(const fs::path& path) {
  return read_canonical_string(read_file(path), path.stem().string());
}

std::string canonical_string(const Corpus& corpus) {
  std::string out;
  for (const auto& i : corpus.instances) {
    out += to_canonical_line(i);
    out.push_back('\n');
  }
  return out;
}

void write_canonical(const Corpus& corpus, const fs::path& path) {
  write_file_atomic(path, canonical_string(corpus));
}

NativeFormat parse_native_format(std::string_view name) {
  if (name == "e2e" || name == "e2e-csv") return NativeFormat::kE2eCsv;
  if (name == "webnlg") return NativeFormat::kWebNlg;
  if (name == "enriched" || name == "enriched-kv") return NativeFormat::kEnrichedKv;
  if (name == "canonical" || name == "jsonl") return NativeFormat::kCanonical;
  throw InvalidArgument("unknown corpus format '" + std::string(name) + "'");
}

std::vector<CsvRow> parse_csv(std::string_view content) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = 1;
  row.line = 1;
  auto end_field = [&] {
    row.fields.push_back(field);
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(row);
    row = CsvRow{};
    row.line = line;
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    any = true;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      ++line;
      end_row();
    } else {
      field.push_back(c);
    }
  }
  if (any && (!field.empty() || !row.fields.empty())) end_row();
  return rows;
}

namespace {

std::string unescape_xml(std::string_view s) {
  std::string out = text::replace_all(s, "&quot;", "\"");
  out = text::replace_all(out, "&apos;", "'");
  out = text::replace_all(out, "&lt;", "<");
  out = text::replace_all(out, "&gt;", ">");
  return text::replace_all(out, "&amp;", "&");
}

struct XmlElement {
  std::string attrs;
  std::string inner;
  std::size_t end = 0;   // offset just after the closing tag
  std::size_t start = 0;
};

// Finds the next <tag ...>...</tag> at or after `from`. Same-name nesting is
// not supported, which holds for the WebNLG elements read here.
bool next_element(std::string_view s, std::string_view tag, std::size_t from,
                  std::size_t limit, XmlElement& out) {
  std::string open = "<" + std::string(tag);
  std::string close = "</" + std::string(tag) + ">";
  std::size_t pos = from;
  while (true) {
    pos = s.find(open, pos);
    if (pos == std::string_view::npos || pos >= limit) return false;
    char after = pos + open.size() < s.size() ? s[pos + open.size()] : '\0';
    if (after == '>' || after == ' ' || after == '/' || text::is_space(after)) break;
    pos += open.size();
  }
  auto gt = s.find('>', pos);
  if (gt == std::string_view::npos) return false;
  out.start = pos;
  out.attrs = std::string(s.substr(pos + open.size(), gt - pos - open.size()));
  if (gt > 0 && s[gt - 1] == '/') {
    out.inner.clear();
    out.end = gt + 1;
    return true;
  }
  auto ce = s.find(close, gt);
  if (ce == std::string_view::npos || ce > limit) return false;
  out.inner = std::string(s.substr(gt + 1, ce - gt - 1));
  out.end = ce + close.size();
  return true;
}

std::string attribute(const std::string& attrs, std::string_view name) {
  std::string key = std::string(name) + "=\"";
  auto p = attrs.find(key);
  if (p == std::string::npos) return {};
  auto e = attrs.find('"', p + key.size());
  return unescape_xml(attrs.substr(p + key.size(), e - p - key.size()));
}

std::string strip_tags(std::string_view s) {
  std::string out;
  bool in_tag = false;
  for (char c : s) {
    if (c == '<') in_tag = true;
    else if (c == '>') in_tag = false;
    else if (!in_tag) out.push_back(c);
  }
  return out;
}

std::size_t line_of(std::string_view s, std::size_t offset) {
  return 1 + static_cast<std::size_t>(std::count(s.begin(), s.begin() + static_cast<long>(offset), '\n'));
}

void read_webnlg_xml(std::string_view s, const NativeOptions& opt, NativeLoad& load) {
  XmlElement entry;
  std::size_t pos = 0;
  std::size_t n = 0;
  while (next_element(s, "entry", pos, s.size(), entry)) {
    pos = entry.end;
    std::size_t line = line_of(s, entry.start);
    std::string domain = attribute(entry.attrs, "category");
    if (domain.empty()) domain = opt.domain;
    std::string eid = attribute(entry.attrs, "eid");
    std::string_view body = entry.inner;
    XmlElement set;
    std::vector<std::string> raws;
    if (next_element(body, "modifiedtripleset", 0, body.size(), set) ||
        next_element(body, "originaltripleset", 0, body.size(), set)) {
      XmlElement t;
      std::size_t tp = 0;
      std::string_view sb = set.inner;
      while (next_element(sb, "mtriple", tp, sb.size(), t) ||
             next_element(sb, "otriple", tp, sb.size(), t)) {
        tp = t.end;
        raws.push_back(unescape_xml(t.inner));
      }
    }
    MR mr;
    try {
      mr = parse_webnlg_triples(raws);
      if (mr.empty()) throw ParseError("entry has no triples");
    } catch (const Error& e) {
      load.issues.push_back({line, e.what()});
      continue;
    }
    XmlElement lex;
    std::size_t lp = 0;
    std::size_t k = 0;
    while (next_element(body, "lex", lp, body.size(), lex)) {
      lp = lex.end;
      XmlElement t;
      std::string raw_text = next_element(lex.inner, "text", 0, lex.inner.size(), t)
                                 ? t.inner
                                 : strip_tags(lex.inner);
      Instance inst;
      inst.id = (eid.empty() ? "webnlg-" + std::to_string(n) : eid) + "-" + std::to_string(k++);
      inst.mr = mr;
      inst.text = text::collapse_whitespace(unescape_xml(raw_text));
      inst.language = opt.language;
      inst.domain = domain;
      inst.split = opt.split;
      if (inst.text.empty()) {
        load.issues.push_back({line_of(s, entry.start + lex.start), "empty lexicalisation"});
        continue;
      }
      load.corpus.instances.push_back(std::move(inst));
    }
    ++n;
  }
}

// Plain block form: triples one per line as "s | p | o", texts prefixed with
// "text:", an optional "domain:" line; entries separated by blank lines.
void read_webnlg_blocks(std::string_view s, const NativeOptions& opt, NativeLoad& load) {
  auto lines = text::split(s, "\n");
  std::vector<std::string> raws;
  std::vector<std::string> texts;
  std::string domain = opt.domain;
  std::size_t block_line = 1;
  std::size_t n = 0;
  auto flush = [&] {
    if (raws.empty() && texts.empty()) return;
    try {
      auto mr = parse_webnlg_triples(raws);
      if (mr.empty()) throw ParseError("entry has no triples");
      std::size_t k = 0;
      for (const auto& t : texts) {
        Instance inst;
        inst.id = "webnlg-" + std::to_string(n) + "-" + std::to_string(k++);
        inst.mr = mr;
        inst.text = t;
        inst.language = opt.language;
        inst.domain = domain;
        inst.split = opt.split;
        load.corpus.instances.push_back(std::move(inst));
      }
      if (texts.empty()) load.issues.push_back({block_line, "entry has no text"});
    } catch (const Error& e) {
      load.issues.push_back({block_line, e.what()});
    }
    ++n;
    raws.clear();
    texts.clear();
    domain = opt.domain;
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty()) {
      flush();
      block_line = i + 2;
      continue;
    }
    if (raws.empty() && texts.empty()) block_line = i + 1;
    if (line[0] == '#') continue;
    if (text::starts_with(line, "text:")) {
      texts.push_back(text::trim(line.substr(5)));
    } else if (text::starts_with(line, "domain:")) {
      domain = text::trim(line.substr(7));
    } else {
      raws.push_back(line);
    }
  }
  flush();
}

}  // namespace

NativeLoad read_native_string(std::string_view content, NativeFormat format,
                              const NativeOptions& opt) {
  NativeLoad load;
  load.corpus.language = opt.language;
  switch (format) {
    case NativeFormat::kCanonical: {
      load.corpus = read_canonical_string(content);
      return load;
    }
    case NativeFormat::kE2eCsv: {
      load.corpus.domain = opt.domain.empty() ? "restaurant" : opt.domain;
      auto rows = parse_csv(content);
      if (rows.empty()) return load;
      const auto& header = rows.front().fields;
      std::size_t mr_col = header.size(), ref_col = header.size();
      for (std::size_t c = 0; c < header.size(); ++c) {
        auto h = text::to_lower(text::trim(header[c]));
        if (h == "mr" || h == "meaning_representation") mr_col = c;
        if (h == "ref" || h == "text" || h == "human_reference") ref_col = c;
      }
      if (mr_col == header.size() || ref_col == header.size()) {
        load.issues.push_back({1, "header must contain 'mr' and 'ref' columns"});
        return load;
      }
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() <= std::max(mr_col, ref_col)) {
          load.issues.push_back({row.line, "row has too few columns"});
          continue;
        }
        try {
          Instance inst;
          inst.id = "e2e-" + std::to_string(r);
          inst.mr = parse_e2e_mr(row.fields[mr_col]);
          inst.text = text::trim(row.fields[ref_col]);
          if (inst.text.empty()) throw ParseError("empty reference text");
          inst.language = opt.language;
          inst.domain = load.corpus.domain;
          inst.split = opt.split;
          load.corpus.instances.push_back(std::move(inst));
        } catch (const Error& e) {
          load.issues.push_back({row.line, e.what()});
        }
      }
      return load;
    }
    case NativeFormat::kWebNlg: {
      auto trimmed = text::trim(content);
      if (!trimmed.empty() && trimmed.front() == '<') {
        read_webnlg_xml(content, opt, load);
      } else {
        read_webnlg_blocks(content, opt, load);
      }
      return load;
    }
    case NativeFormat::kEnrichedKv: {
      auto lines = text::split(content, "\n");
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        try {
          auto j = Json::parse(lines[i]);
          Json canonical;
          canonical["id"] = j.value("id", "kv-" + std::to_string(i + 1));
          canonical["mr"] = mr_to_json(parse_e2e_mr(j.at("mr").get<std::string>()));
          canonical["text"] = j.at("text");
          canonical["spans"] = j.value("spans", Json::array());
          canonical["language"] = j.value("language", std::string(to_string(opt.language)));
          canonical["domain"] = j.value("domain", opt.domain);
          canonical["split"] = j.value("split", std::string(to_string(opt.split)));
          if (j.contains("pos")) canonical["pos"] = j.at("pos");
          load.corpus.instances.push_back(instance_from_json(canonical, i + 1));
        } catch (const nlohmann::json::exception& e) {
          load.issues.push_back({i + 1, e.what()});
        } catch (const Error& e) {
          load.issues.push_back({i + 1, e.what()});
        }
      }
      return load;
    }
  }
  return load;
}

NativeLoad read_native(const fs::path& path, NativeFormat format, const NativeOptions& options) {
  auto load = read_native_string(read_file(path), format, options);
  load.corpus.name = path.stem().string();
  return load;
}

}  // namespace d2tx::corpus
