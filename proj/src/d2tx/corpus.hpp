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

#ifndef D2TX_CORPUS_HPP_
#define D2TX_CORPUS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace d2tx::corpus {

enum class MrShape { kKeyValue, kTripleSet };
enum class Language { kEn, kNl };
enum class Split { kTrain, kDev, kTest };

std::string_view to_string(MrShape shape);
std::string_view to_string(Language language);
std::string_view to_string(Split split);
MrShape parse_shape(std::string_view s);
Language parse_language(std::string_view s);
Split parse_split(std::string_view s);

struct Slot {
  std::string key;
  std::string value;
  friend bool operator==(const Slot&, const Slot&) = default;
};

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;
  friend bool operator==(const Triple&, const Triple&) = default;
};

// Ordered, homogeneous list of slots or triples. Construction validates the
// field invariants (non-empty, no serialization markers).
class MeaningRepresentation {
 public:
  MeaningRepresentation() = default;
  explicit MeaningRepresentation(std::vector<Slot> slots);
  explicit MeaningRepresentation(std::vector<Triple> triples);

  MrShape shape() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  const std::vector<Slot>& slots() const;
  const std::vector<Triple>& triples() const;

  // Components of field i: {key, value} or {subject, predicate, object}.
  std::vector<std::string> components(std::size_t i) const;
  // The surface values of field i that can be aligned to text: the value of a
  // slot; subject and object of a triple.
  std::vector<std::string> alignable_values(std::size_t i) const;

  // Returns a copy where field i's component `component` is replaced.
  MeaningRepresentation with_component(std::size_t i, std::size_t component,
                                       std::string value) const;
  // Keeps only the listed fields, in the listed order.
  MeaningRepresentation subset(const std::vector<std::size_t>& fields) const;

  // Order-insensitive identity of the normalized field set.
  std::string set_key() const;
  bool same_set(const MeaningRepresentation& other) const {
    return set_key() == other.set_key();
  }

  // Slot-order-preserving equality.
  friend bool operator==(const MeaningRepresentation&,
                         const MeaningRepresentation&) = default;

 private:
  std::variant<std::vector<Slot>, std::vector<Triple>> fields_;
};

using MR = MeaningRepresentation;

// Byte offsets into Instance::text (code point offsets on disk).
struct AlignmentSpan {
  std::size_t slot_index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const AlignmentSpan&, const AlignmentSpan&) = default;
};

struct Provenance {
  std::string method;  // "dataug" | "pseulab"
  std::string tier;    // "S" | "M" | "L" | "XL"
  int rank = 0;        // dataug only
  std::string origin;  // pseulab only
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Instance {
  std::string id;
  MR mr;
  std::string text;
  std::vector<AlignmentSpan> spans;
  Language language = Language::kEn;
  std::string domain;
  Split split = Split::kTrain;
  // Optional POS tags parallel to tokenize(text).
  std::vector<std::string> pos;
  std::optional<Provenance> provenance;
  friend bool operator==(const Instance&, const Instance&) = default;
};

// Throws ValidationError when a span is out of range, overlaps another span,
// references a missing slot or does not cover the slot's value.
void validate_instance(const Instance& instance);

struct Corpus {
  std::string name;
  std::string domain;
  Language language = Language::kEn;
  std::vector<Instance> instances;

  std::vector<const Instance*> in_split(Split split) const;
  std::size_t count(Split split) const;
};

// Field normalization used for uniqueness: keys and predicates lowercased,
// values whitespace-collapsed with '_' read as a space.
std::string normalize_key(std::string_view key);
std::string normalize_value(std::string_view value);

MR parse_e2e_mr(std::string_view raw);
std::string format_e2e_mr(const MR& mr);
MR parse_webnlg_triples(const std::vector<std::string>& raws);
std::string format_webnlg_triple(const Triple& triple);

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
  friend bool operator==(const Token&, const Token&) = default;
};

// Whitespace split with punctuation split off as separate tokens; a '.' or
// ',' between two digits stays inside the number. Case is preserved.
std::vector<Token> tokenize_with_offsets(std::string_view text,
                                         Language language = Language::kEn);
std::vector<std::string> tokenize(std::string_view text,
                                  Language language = Language::kEn);
bool is_punctuation_token(std::string_view token);

struct CorpusStats {
  std::size_t instances = 0;
  std::size_t unique_mrs = 0;
  std::size_t tokens = 0;
  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// Counts the train split, plus dev when include_dev is set.
CorpusStats corpus_stats(const Corpus& corpus, bool include_dev = false);

struct ReferenceGroup {
  MR mr;
  std::vector<std::string> texts;
  std::vector<std::string> ids;  // instance ids, parallel to texts
  std::vector<const Instance*> members;
};

std::vector<ReferenceGroup> group_references(
    const std::vector<const Instance*>& instances);
std::vector<ReferenceGroup> group_references(
    const std::vector<Instance>& instances);

}  // namespace d2tx::corpus

#endif  // D2TX_CORPUS_HPP_
