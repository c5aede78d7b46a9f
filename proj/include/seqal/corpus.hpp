// Copyright 2026 The seqal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// BIO-tagged corpora: tags, sentences, CoNLL-style I/O, entity spans,
// corpus statistics and seeded splits.
//
// On-disk format: one "token<TAB>tag" line per token, sentences separated
// by a blank line, UTF-8, no comment lines.

#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "seqal/error.hpp"
#include "seqal/random.hpp"

namespace seqal {

class Tag {
 public:
  enum class Prefix : std::uint8_t { kOutside, kBegin, kInside };

  Tag() = default;

  static Tag outside() { return Tag(); }
  static Tag begin(std::string type) { return Tag(Prefix::kBegin, std::move(type)); }
  static Tag inside(std::string type) { return Tag(Prefix::kInside, std::move(type)); }

  // Accepts "O" or "B-<type>" / "I-<type>" with a non-empty type.
  static std::optional<Tag> parse(std::string_view raw) {
    if (raw == "O") return outside();
    if (raw.size() < 3 || raw[1] != '-') return std::nullopt;
    std::string type(raw.substr(2));
    if (raw[0] == 'B') return begin(std::move(type));
    if (raw[0] == 'I') return inside(std::move(type));
    return std::nullopt;
  }

  Prefix prefix() const { return prefix_; }
  const std::string& type() const { return type_; }
  bool is_outside() const { return prefix_ == Prefix::kOutside; }
  bool is_begin() const { return prefix_ == Prefix::kBegin; }
  bool is_inside() const { return prefix_ == Prefix::kInside; }

  std::string str() const {
    switch (prefix_) {
      case Prefix::kBegin: return "B-" + type_;
      case Prefix::kInside: return "I-" + type_;
      default: return "O";
    }
  }

  auto operator<=>(const Tag&) const = default;

 private:
  Tag(Prefix p, std::string type) : prefix_(p), type_(std::move(type)) {}

  Prefix prefix_ = Prefix::kOutside;
  std::string type_;
};

using TagSequence = std::vector<Tag>;

// Converts raw strings to tags; throws ParseError on an unknown label.
inline TagSequence parse_tags(std::span<const std::string> raw) {
  TagSequence out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto t = Tag::parse(raw[i]);
    if (!t) throw ParseError("invalid tag '" + raw[i] + "' at position " + std::to_string(i), 0);
    out.push_back(std::move(*t));
  }
  return out;
}

// Position of the first I-X that does not follow B-X or I-X.
inline std::optional<std::size_t> first_bio_violation(std::span<const Tag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!tags[i].is_inside()) continue;
    if (i == 0 || tags[i - 1].is_outside() || tags[i - 1].type() != tags[i].type()) return i;
  }
  return std::nullopt;
}

inline bool is_valid_bio(std::span<const Tag> tags) { return !first_bio_violation(tags); }

// Human-readable reason for a violation at `pos`.
inline std::string bio_violation_message(std::span<const Tag> tags, std::size_t pos) {
  std::string prev = pos == 0 ? "sentence start" : tags[pos - 1].str();
  return tags[pos].str() + " at position " + std::to_string(pos) + " follows " + prev;
}

// Rewrites orphan I-X as B-X. Idempotent; valid sequences are unchanged.
inline TagSequence repair_bio(std::span<const Tag> tags) {
  TagSequence out(tags.begin(), tags.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].is_inside()) continue;
    if (i == 0 || out[i - 1].is_outside() || out[i - 1].type() != out[i].type()) {
      out[i] = Tag::begin(out[i].type());
    }
  }
  return out;
}

struct LabeledSentence {
  int id = 0;
  std::vector<std::string> tokens;
  TagSequence tags;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const LabeledSentence&) const = default;
};

struct Dataset {
  std::vector<LabeledSentence> sentences;
  std::vector<std::string> schema;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  bool operator==(const Dataset&) const = default;
};

// Checks alignment, BIO validity, schema coverage and id uniqueness.
inline void validate(const Dataset& d) {
  std::unordered_set<std::string> known(d.schema.begin(), d.schema.end());
  std::unordered_set<int> ids;
  for (const auto& s : d.sentences) {
    if (s.tokens.empty() || s.tokens.size() != s.tags.size()) {
      throw ValidationError("sentence " + std::to_string(s.id) + ": tokens and tags misaligned",
                            s.id, 0);
    }
    if (!ids.insert(s.id).second) {
      throw ValidationError("duplicate sentence id " + std::to_string(s.id), s.id, 0);
    }
    if (auto pos = first_bio_violation(s.tags)) {
      throw ValidationError("sentence " + std::to_string(s.id) + ": " +
                                bio_violation_message(s.tags, *pos),
                            s.id, *pos);
    }
    for (std::size_t i = 0; i < s.tags.size(); ++i) {
      if (!s.tags[i].is_outside() && !known.count(s.tags[i].type())) {
        throw ValidationError("sentence " + std::to_string(s.id) + ": type '" +
                                  s.tags[i].type() + "' not in schema",
                              s.id, i);
      }
    }
  }
}

struct ParseOptions {
  // Map orphan I-X to B-X instead of rejecting the sentence.
  bool repair = false;
};

inline Dataset parse_conll(std::istream& in, const ParseOptions& opts = {}) {
  Dataset d;
  std::unordered_set<std::string> seen_types;
  LabeledSentence cur;
  std::size_t sentence_line = 0;

  auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.id = static_cast<int>(d.sentences.size());
    if (opts.repair) cur.tags = repair_bio(cur.tags);
    if (auto pos = first_bio_violation(cur.tags)) {
      throw ValidationError("sentence " + std::to_string(cur.id) + " (line " +
                                std::to_string(sentence_line) +
                                "): " + bio_violation_message(cur.tags, *pos),
                            cur.id, *pos);
    }
    for (const auto& t : cur.tags) {
      if (!t.is_outside() && seen_types.insert(t.type()).second) d.schema.push_back(t.type());
    }
    d.sentences.push_back(std::move(cur));
    cur = LabeledSentence{};
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("expected 2 tab-separated columns", lineno);
    }
    std::string_view token(line.data(), tab);
    std::string_view raw_tag(line.data() + tab + 1, line.size() - tab - 1);
    if (token.empty()) throw ParseError("empty token", lineno);
    auto tag = Tag::parse(raw_tag);
    if (!tag) throw ParseError("invalid tag '" + std::string(raw_tag) + "'", lineno);
    if (cur.tokens.empty()) sentence_line = lineno;
    cur.tokens.emplace_back(token);
    cur.tags.push_back(std::move(*tag));
  }
  flush();
  return d;
}

inline Dataset parse_conll_string(std::string_view text, const ParseOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return parse_conll(in, opts);
}

inline Dataset read_conll_file(const std::string& path, const ParseOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_conll(in, opts);
}

inline void write_conll(std::ostream& out, const Dataset& d) {
  for (const auto& s : d.sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i] << '\t' << s.tags[i].str() << '\n';
    }
    out << '\n';
  }
}

inline std::string serialize_conll(const Dataset& d) {
  std::ostringstream out;
  write_conll(out, d);
  return out.str();
}

struct EntitySpan {
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  std::size_t length() const { return end - start + 1; }
  auto operator<=>(const EntitySpan&) const = default;
};

// Maximal B-X (I-X)* runs in order of start. Throws on invalid BIO.
inline std::vector<EntitySpan> extract_entities(std::span<const Tag> tags) {
  if (auto pos = first_bio_violation(tags)) {
    throw ValidationError(bio_violation_message(tags, *pos), -1, *pos);
  }
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].is_begin()) {
      spans.push_back({tags[i].type(), i, i});
    } else if (tags[i].is_inside()) {
      spans.back().end = i;
    }
  }
  return spans;
}

// Columns of the corpus statistics table. pct_* are fractions in [0, 1].
struct CorpusStats {
  std::size_t n_sentences = 0;
  std::size_t n_tokens = 0;
  std::size_t n_entity_types = 0;
  std::size_t n_entities = 0;
  double avg_sentence_len = 0;
  double avg_entities_per_sentence = 0;
  double avg_entity_len = 0;
  double pct_positive_tokens = 0;
  double pct_sentences_with_entity = 0;
  double pct_sentences_with_2plus_entities = 0;
};

// %PT counts both B- and I- tokens; %AC is >= 1 entity, %DAC is >= 2.
inline CorpusStats dataset_stats(const Dataset& d) {
  if (d.empty()) throw Error("dataset_stats: empty dataset");
  CorpusStats st;
  st.n_sentences = d.size();
  st.n_entity_types = d.schema.size();
  std::size_t positive = 0, with_one = 0, with_two = 0;
  for (const auto& s : d.sentences) {
    st.n_tokens += s.size();
    std::size_t ents = 0;
    for (const auto& t : s.tags) {
      if (!t.is_outside()) ++positive;
      if (t.is_begin()) ++ents;
    }
    st.n_entities += ents;
    if (ents >= 1) ++with_one;
    if (ents >= 2) ++with_two;
  }
  const double ns = static_cast<double>(st.n_sentences);
  st.avg_sentence_len = static_cast<double>(st.n_tokens) / ns;
  st.avg_entities_per_sentence = static_cast<double>(st.n_entities) / ns;
  st.avg_entity_len =
      st.n_entities ? static_cast<double>(positive) / static_cast<double>(st.n_entities) : 0.0;
  st.pct_positive_tokens = static_cast<double>(positive) / static_cast<double>(st.n_tokens);
  st.pct_sentences_with_entity = static_cast<double>(with_one) / ns;
  st.pct_sentences_with_2plus_entities = static_cast<double>(with_two) / ns;
  return st;
}

struct Split {
  Dataset labeled;
  Dataset pool;
  Dataset test;
};

// Uniform partition without replacement, deterministic in `seed`. Each part
// keeps the original ids, ordered by id, and the full schema.
inline Split split(const Dataset& d, std::uint64_t seed, std::size_t n_seed_labeled,
                   std::size_t n_test) {
  if (n_seed_labeled + n_test > d.size()) {
    throw Error("split: " + std::to_string(n_seed_labeled) + " labeled + " +
                std::to_string(n_test) + " test exceeds corpus size " + std::to_string(d.size()));
  }
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  auto take = [&](std::size_t from, std::size_t to) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                 order.begin() + static_cast<std::ptrdiff_t>(to));
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return d.sentences[a].id < d.sentences[b].id; });
    Dataset part;
    part.schema = d.schema;
    for (auto i : idx) part.sentences.push_back(d.sentences[i]);
    return part;
  };
  Split out;
  out.labeled = take(0, n_seed_labeled);
  out.test = take(n_seed_labeled, n_seed_labeled + n_test);
  out.pool = take(n_seed_labeled + n_test, d.size());
  return out;
}

}  // namespace seqal
