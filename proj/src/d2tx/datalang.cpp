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

#include "d2tx/datalang.hpp"

#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::datalang {

std::string serialize_mr(const corpus::MR& mr) {
  if (mr.empty()) throw InvalidArgument("cannot serialize an empty MR");
  std::string out;
  for (std::size_t i = 0; i < mr.size(); ++i) {
    if (i) out.append(kEof);
    auto parts = mr.components(i);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k) out.append(kSep);
      out.append(parts[k]);
    }
  }
  return out;
}

ParseReport parse_datalang(std::string_view raw, corpus::MrShape shape) {
  const std::size_t arity = shape == corpus::MrShape::kKeyValue ? 2 : 3;
  ParseReport report;
  std::vector<corpus::Slot> slots;
  std::vector<corpus::Triple> triples;
  auto fields = text::split(raw, "@EOF@");
  for (std::size_t f = 0; f < fields.size(); ++f) {
    auto field = text::trim(fields[f]);
    if (field.empty()) {
      if (fields.size() > 1) report.warnings.push_back({f, field, "empty field"});
      continue;
    }
    auto parts = text::split(field, "@SEP@");
    for (auto& p : parts) p = text::trim(p);
    bool empty_part = false;
    for (const auto& p : parts) empty_part = empty_part || p.empty();
    if (parts.size() != arity || empty_part) {
      report.warnings.push_back(
          {f, field,
           "expected " + std::to_string(arity) + " components, got " +
               std::to_string(parts.size()) + (empty_part ? " (some empty)" : "")});
      continue;
    }
    if (arity == 2) {
      slots.push_back({parts[0], parts[1]});
    } else {
      triples.push_back({parts[0], parts[1], parts[2]});
    }
  }
  if (slots.empty() && triples.empty()) {
    throw ParseError("no recoverable fields in data string '" + std::string(raw) + "'");
  }
  report.mr = arity == 2 ? corpus::MR(std::move(slots)) : corpus::MR(std::move(triples));
  return report;
}

std::string make_labeling_prompt(corpus::Language language, std::string_view text) {
  std::string out = language == corpus::Language::kEn ? "translate English to Data: "
                                                      : "translate Dutch to Data: ";
  out.append(text);
  return out;
}

std::string make_verbalize_prompt(std::string_view datastring) {
  if (datastring.empty()) throw InvalidArgument("empty data string");
  return "Verbalize: " + std::string(datastring);
}

}  // namespace d2tx::datalang
