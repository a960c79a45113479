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

#include "d2tx/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::corpus {

namespace {

constexpr std::string_view kSepMarker = "@SEP@";
constexpr std::string_view kEofMarker = "@EOF@";

void check_field(std::string_view what, std::string_view field) {
  if (text::trim(field).empty()) {
    throw ValidationError("empty " + std::string(what) + " in meaning representation");
  }
  if (field.find(kSepMarker) != std::string_view::npos ||
      field.find(kEofMarker) != std::string_view::npos) {
    throw ValidationError(std::string(what) + " contains a serialization marker: '" +
                          std::string(field) + "'");
  }
}

std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

std::string_view to_string(MrShape shape) {
  return shape == MrShape::kKeyValue ? "kv" : "triples";
}

std::string_view to_string(Language language) {
  return language == Language::kEn ? "en" : "nl";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

MrShape parse_shape(std::string_view s) {
  if (s == "kv") return MrShape::kKeyValue;
  if (s == "triples") return MrShape::kTripleSet;
  throw ParseError("unknown MR shape '" + std::string(s) + "'");
}

Language parse_language(std::string_view s) {
  if (s == "en") return Language::kEn;
  if (s == "nl") return Language::kNl;
  throw ParseError("unknown language '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split '" + std::string(s) + "'");
}

MeaningRepresentation::MeaningRepresentation(std::vector<Slot> slots) {
  for (const auto& s : slots) {
    check_field("key", s.key);
    check_field("value", s.value);
  }
  fields_ = std::move(slots);
}

MeaningRepresentation::MeaningRepresentation(std::vector<Triple> triples) {
  for (const auto& t : triples) {
    check_field("subject", t.subject);
    check_field("predicate", t.predicate);
    check_field("object", t.object);
  }
  fields_ = std::move(triples);
}

MrShape MeaningRepresentation::shape() const {
  return fields_.index() == 0 ? MrShape::kKeyValue : MrShape::kTripleSet;
}

std::size_t MeaningRepresentation::size() const {
  return std::visit([](const auto& v) { return v.size(); }, fields_);
}

const std::vector<Slot>& MeaningRepresentation::slots() const {
  if (shape() != MrShape::kKeyValue) {
    throw InvalidArgument("meaning representation holds triples, not slots");
  }
  return std::get<0>(fields_);
}

const std::vector<Triple>& MeaningRepresentation::triples() const {
  if (shape() != MrShape::kTripleSet) {
    throw InvalidArgument("meaning representation holds slots, not triples");
  }
  return std::get<1>(fields_);
}

std::vector<std::string> MeaningRepresentation::components(std::size_t i) const {
  if (i >= size()) throw InvalidArgument("field index out of range");
  if (shape() == MrShape::kKeyValue) {
    const auto& s = std::get<0>(fields_)[i];
    return {s.key, s.value};
  }
  const auto& t = std::get<1>(fields_)[i];
  return {t.subject, t.predicate, t.object};
}

std::vector<std::string> MeaningRepresentation::alignable_values(std::size_t i) const {
  auto c = components(i);
  if (c.size() == 2) return {c[1]};
  return {c[0], c[2]};
}

MeaningRepresentation MeaningRepresentation::with_component(
    std::size_t i, std::size_t component, std::string value) const {
  if (i >= size()) throw InvalidArgument("field index out of range");
  if (shape() == MrShape::kKeyValue) {
    auto slots = std::get<0>(fields_);
    if (component == 0) slots[i].key = std::move(value);
    else if (component == 1) slots[i].value = std::move(value);
    else throw InvalidArgument("slot component out of range");
    return MeaningRepresentation(std::move(slots));
  }
  auto triples = std::get<1>(fields_);
  if (component == 0) triples[i].subject = std::move(value);
  else if (component == 1) triples[i].predicate = std::move(value);
  else if (component == 2) triples[i].object = std::move(value);
  else throw InvalidArgument("triple component out of range");
  return MeaningRepresentation(std::move(triples));
}

MeaningRepresentation MeaningRepresentation::subset(
    const std::vector<std::size_t>& fields) const {
  if (shape() == MrShape::kKeyValue) {
    std::vector<Slot> out;
    for (auto i : fields) out.push_back(std::get<0>(fields_).at(i));
    return MeaningRepresentation(std::move(out));
  }
  std::vector<Triple> out;
  for (auto i : fields) out.push_back(std::get<1>(fields_).at(i));
  return MeaningRepresentation(std::move(out));
}

std::string MeaningRepresentation::set_key() const {
  std::set<std::string> normalized;
  for (std::size_t i = 0; i < size(); ++i) {
    auto c = components(i);
    std::string f;
    if (c.size() == 2) {
      f = normalize_key(c[0]) + '\x1f' + normalize_value(c[1]);
    } else {
      f = normalize_value(c[0]) + '\x1f' + normalize_key(c[1]) + '\x1f' +
          normalize_value(c[2]);
    }
    normalized.insert(std::move(f));
  }
  std::string key(to_string(shape()));
  for (const auto& f : normalized) {
    key.push_back('\x1e');
    key.append(f);
  }
  return key;
}

std::string normalize_key(std::string_view key) {
  return text::to_lower(normalize_value(key));
}

std::string normalize_value(std::string_view value) {
  return text::collapse_whitespace(text::replace_all(value, "_", " "));
}

void validate_instance(const Instance& instance) {
  std::vector<AlignmentSpan> sorted = instance.spans;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.begin < b.begin;
  });
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto& s = sorted[k];
    if (!(s.begin < s.end && s.end <= instance.text.size())) {
      throw ValidationError("span [" + std::to_string(s.begin) + ", " +
                            std::to_string(s.end) + ") out of range in instance '" +
                            instance.id + "'");
    }
    if (k > 0 && sorted[k - 1].end > s.begin) {
      throw ValidationError("overlapping spans in instance '" + instance.id + "'");
    }
    if (s.slot_index >= instance.mr.size()) {
      throw ValidationError("span references missing slot " +
                            std::to_string(s.slot_index) + " in instance '" +
                            instance.id + "'");
    }
    auto covered = text::collapse_whitespace(
        std::string_view(instance.text).substr(s.begin, s.end - s.begin));
    bool ok = false;
    for (const auto& v : instance.mr.alignable_values(s.slot_index)) {
      if (text::collapse_whitespace(v) == covered) ok = true;
    }
    if (!ok) {
      throw ValidationError("span text '" + covered + "' does not match slot " +
                            std::to_string(s.slot_index) + " in instance '" +
                            instance.id + "'");
    }
  }
}

std::vector<const Instance*> Corpus::in_split(Split split) const {
  std::vector<const Instance*> out;
  for (const auto& i : instances) {
    if (i.split == split) out.push_back(&i);
  }
  return out;
}

std::size_t Corpus::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(),
                    [split](const Instance& i) { return i.split == split; }));
}

MR parse_e2e_mr(std::string_view raw) {
  if (text::trim(raw).empty()) throw ParseError("empty MR");
  std::vector<std::string> fields;
  std::string current;
  int depth = 0;
  for (char c : raw) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      fields.push_back(current);
      current.clear();
      continue;
    }
    current.push_back(c);
  }
  fields.push_back(current);

  std::vector<Slot> slots;
  for (const auto& f : fields) {
    auto field = text::trim(f);
    auto open = field.find('[');
    if (open == std::string::npos || field.empty() || field.back() != ']') {
      throw ParseError("malformed MR field '" + field + "'");
    }
    auto key = text::trim(field.substr(0, open));
    auto value = text::trim(field.substr(open + 1, field.size() - open - 2));
    if (key.empty() || value.empty()) {
      throw ParseError("malformed MR field '" + field + "'");
    }
    slots.push_back({key, value});
  }
  try {
    return MR(std::move(slots));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

std::string format_e2e_mr(const MR& mr) {
  std::vector<std::string> parts;
  for (const auto& s : mr.slots()) parts.push_back(s.key + "[" + s.value + "]");
  return text::join(parts, ", ");
}

MR parse_webnlg_triples(const std::vector<std::string>& raws) {
  std::vector<Triple> triples;
  for (const auto& raw : raws) {
    auto parts = text::split(raw, "|");
    if (parts.size() != 3) {
      throw ParseError("triple '" + raw + "' has " + std::to_string(parts.size()) +
                       " components, expected 3");
    }
    auto value = [](const std::string& p) {
      return normalize_value(strip_quotes(text::trim(p)));
    };
    Triple t{value(parts[0]), text::trim(parts[1]), value(parts[2])};
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
      throw ParseError("triple '" + raw + "' has an empty component");
    }
    triples.push_back(std::move(t));
  }
  try {
    return MR(std::move(triples));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

std::string format_webnlg_triple(const Triple& triple) {
  return triple.subject + " | " + triple.predicate + " | " + triple.object;
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  std::size_t pos = 0;
  while (pos < token.size()) {
    if (!text::is_punct_codepoint(text::decode_utf8(token, pos))) return false;
  }
  return true;
}

std::vector<Token> tokenize_with_offsets(std::string_view s, Language) {
  std::vector<Token> out;
  Token current;
  bool open = false;
  auto flush = [&](std::size_t end) {
    if (open) {
      current.end = end;
      current.text = std::string(s.substr(current.begin, end - current.begin));
      out.push_back(current);
      open = false;
    }
  };
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t start = pos;
    char32_t cp = text::decode_utf8(s, pos);
    if (cp < 0x80 && text::is_space(static_cast<char>(cp))) {
      flush(start);
      continue;
    }
    if (text::is_punct_codepoint(cp)) {
      bool numeric_inner = (cp == '.' || cp == ',') && open && start > 0 &&
                           text::is_digit(s[start - 1]) && pos < s.size() &&
                           text::is_digit(s[pos]);
      if (numeric_inner) continue;
      flush(start);
      out.push_back({std::string(s.substr(start, pos - start)), start, pos});
      continue;
    }
    if (!open) {
      open = true;
      current.begin = start;
    }
  }
  flush(s.size());
  return out;
}

std::vector<std::string> tokenize(std::string_view s, Language language) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(s, language)) out.push_back(std::move(t.text));
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus, bool include_dev) {
  CorpusStats stats;
  std::set<std::string> mrs;
  for (const auto& i : corpus.instances) {
    if (i.split == Split::kTest) continue;
    if (i.split == Split::kDev && !include_dev) continue;
    ++stats.instances;
    mrs.insert(i.mr.set_key());
    stats.tokens += tokenize(i.text, i.language).size();
  }
  stats.unique_mrs = mrs.size();
  return stats;
}

std::vector<ReferenceGroup> group_references(
    const std::vector<const Instance*>& instances) {
  std::vector<ReferenceGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto* i : instances) {
    auto key = i->mr.set_key();
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, groups.size());
      groups.push_back({i->mr, {}, {}, {}});
      it = index.find(key);
    }
    auto& g = groups[it->second];
    g.texts.push_back(i->text);
    g.ids.push_back(i->id);
    g.members.push_back(i);
  }
  return groups;
}

std::vector<ReferenceGroup> group_references(const std::vector<Instance>& instances) {
  std::vector<const Instance*> ptrs;
  for (const auto& i : instances) ptrs.push_back(&i);
  return group_references(ptrs);
}

}  // namespace d2tx::corpus
