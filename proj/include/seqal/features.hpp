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

// Sparse indicator features for CRF emissions.
//
// Feature names fired at position i of a sentence (default template):
//   bias                      always
//   w0=<tok>                  token identity
//   lw0=<lower>               ASCII-lowercased token
//   p1= p2= p3= s1= s2= s3=   prefixes/suffixes of 1..3 code points
//   digit / punct             all code points are digits / ASCII punctuation
//   w-2= w-1= w+1= w+2=       neighbor identities, "<BOS>"/"<EOS>" past the ends
//   bg=<prev>|<tok>           previous + current token bigram

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqal/corpus.hpp"
#include "seqal/error.hpp"

namespace seqal {

struct FeatureTemplate {
  bool identity = true;
  bool lowercase = true;
  bool affixes = true;
  bool shape = true;
  bool window = true;
  bool bigram = true;

  static FeatureTemplate none() { return {false, false, false, false, false, false}; }
  static FeatureTemplate identity_only() {
    auto t = none();
    t.identity = true;
    return t;
  }

  // Comma-separated subset of: identity,lowercase,affixes,shape,window,bigram
  // ("all" and "none" also accepted).
  static FeatureTemplate parse(std::string_view spec) {
    if (spec == "all") return {};
    auto t = none();
    if (spec == "none" || spec.empty()) return t;
    std::size_t start = 0;
    while (start <= spec.size()) {
      auto comma = spec.find(',', start);
      auto part = spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start);
      if (part == "identity") t.identity = true;
      else if (part == "lowercase") t.lowercase = true;
      else if (part == "affixes") t.affixes = true;
      else if (part == "shape") t.shape = true;
      else if (part == "window") t.window = true;
      else if (part == "bigram") t.bigram = true;
      else throw ConfigError("unknown feature template part '" + std::string(part) + "'");
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return t;
  }

  std::string str() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
      if (!on) return;
      if (!out.empty()) out += ',';
      out += name;
    };
    add(identity, "identity");
    add(lowercase, "lowercase");
    add(affixes, "affixes");
    add(shape, "shape");
    add(window, "window");
    add(bigram, "bigram");
    return out.empty() ? "none" : out;
  }

  bool operator==(const FeatureTemplate&) const = default;
};

namespace detail {

// Byte offsets of UTF-8 code point starts, plus the end offset.
inline std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(s.size());
  return out;
}

inline bool all_of_bytes(std::string_view s, int (*pred)(int)) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [&](char c) { return pred(static_cast<unsigned char>(c)) != 0; });
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline constexpr std::string_view kBias = "bias";

// Appends every feature name fired at `pos`.
inline void fire_features(std::span<const std::string> tokens, std::size_t pos,
                          const FeatureTemplate& tpl, std::vector<std::string>& out) {
  const std::string& tok = tokens[pos];
  out.emplace_back(kBias);
  if (tpl.identity) out.push_back("w0=" + tok);
  if (tpl.lowercase) out.push_back("lw0=" + ascii_lower(tok));
  if (tpl.affixes) {
    const auto cp = code_point_offsets(tok);
    const std::size_t n = cp.size() - 1;
    for (std::size_t k = 1; k <= 3 && k <= n; ++k) {
      out.push_back("p" + std::to_string(k) + "=" + tok.substr(0, cp[k]));
      out.push_back("s" + std::to_string(k) + "=" + tok.substr(cp[n - k]));
    }
  }
  if (tpl.shape) {
    if (all_of_bytes(tok, &::isdigit)) out.emplace_back("digit");
    if (all_of_bytes(tok, &::ispunct)) out.emplace_back("punct");
  }
  auto neighbor = [&](long off) -> std::string {
    long j = static_cast<long>(pos) + off;
    if (j < 0) return "<BOS>";
    if (j >= static_cast<long>(tokens.size())) return "<EOS>";
    return tokens[static_cast<std::size_t>(j)];
  };
  if (tpl.window) {
    for (long off : {-2L, -1L, 1L, 2L}) {
      out.push_back("w" + std::string(off < 0 ? "-" : "+") + std::to_string(std::labs(off)) + "=" +
                    neighbor(off));
    }
  }
  if (tpl.bigram) out.push_back("bg=" + neighbor(-1) + "|" + tok);
}

}  // namespace detail

// Feature name -> dense id. Built frozen; lookups never add ids.
class FeatureIndex {
 public:
  FeatureIndex() = default;

  // Ids follow the lexicographic order of feature names.
  static FeatureIndex from_names(const std::set<std::string>& names, FeatureTemplate tpl) {
    FeatureIndex idx;
    idx.template_ = tpl;
    idx.names_.assign(names.begin(), names.end());
    for (std::size_t i = 0; i < idx.names_.size(); ++i) {
      idx.ids_.emplace(idx.names_[i], static_cast<int>(i));
    }
    idx.frozen_ = true;
    return idx;
  }

  std::optional<int> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return names_.size(); }
  bool frozen() const { return frozen_; }
  const FeatureTemplate& feature_template() const { return template_; }
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int bias_id() const { return ids_.at(std::string(detail::kBias)); }

  bool operator==(const FeatureIndex& o) const {
    return names_ == o.names_ && template_ == o.template_ && frozen_ == o.frozen_;
  }

  // "#template<TAB><spec>" header, then one "name<TAB>id" line per feature.
  void write(std::ostream& out) const {
    out << "#template\t" << template_.str() << '\n';
    for (std::size_t i = 0; i < names_.size(); ++i) out << names_[i] << '\t' << i << '\n';
  }

  static FeatureIndex read(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    FeatureTemplate tpl;
    std::map<int, std::string> by_id;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw ParseError("feature index: missing TAB", lineno);
      if (lineno == 1 && line.rfind("#template\t", 0) == 0) {
        tpl = FeatureTemplate::parse(line.substr(tab + 1));
        continue;
      }
      int id = 0;
      try {
        id = std::stoi(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw ParseError("feature index: bad id", lineno);
      }
      if (!by_id.emplace(id, line.substr(0, tab)).second) {
        throw ParseError("feature index: duplicate id", lineno);
      }
    }
    FeatureIndex idx;
    idx.template_ = tpl;
    for (auto& [id, name] : by_id) {
      if (id != static_cast<int>(idx.names_.size())) throw ParseError("feature index: ids not dense", 0);
      idx.ids_.emplace(name, id);
      idx.names_.push_back(std::move(name));
    }
    if (!idx.ids_.count(std::string(detail::kBias))) throw ParseError("feature index: no bias", 0);
    idx.frozen_ = true;
    return idx;
  }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
  FeatureTemplate template_;
  bool frozen_ = false;
};

// Every feature fired by `tpl` over the tokens of `d`, plus bias.
inline FeatureIndex build_feature_index(const Dataset& d, FeatureTemplate tpl = {}) {
  if (d.empty()) throw Error("build_feature_index: empty dataset");
  std::set<std::string> names{std::string(detail::kBias)};
  std::vector<std::string> fired;
  for (const auto& s : d.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      fired.clear();
      detail::fire_features(s.tokens, i, tpl, fired);
      names.insert(fired.begin(), fired.end());
    }
  }
  return FeatureIndex::from_names(names, tpl);
}

// Sorted, deduplicated ids of the features fired at `position` that exist
// in `idx`. Unknown features are dropped.
inline std::vector<int> featurize(std::span<const std::string> tokens, std::size_t position,
                                  const FeatureIndex& idx) {
  if (!idx.frozen()) throw Error("featurize: index not frozen");
  if (position >= tokens.size()) {
    throw Error("featurize: position " + std::to_string(position) + " out of range");
  }
  std::vector<std::string> fired;
  detail::fire_features(tokens, position, idx.feature_template(), fired);
  std::vector<int> ids;
  ids.reserve(fired.size());
  for (const auto& name : fired) {
    if (auto id = idx.find(name)) ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct FeaturizedSentence {
  int id = 0;
  std::vector<std::vector<int>> features;  // one list per token

  std::size_t size() const { return features.size(); }
};

inline FeaturizedSentence featurize_sentence(const LabeledSentence& s, const FeatureIndex& idx) {
  FeaturizedSentence fs;
  fs.id = s.id;
  fs.features.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) fs.features.push_back(featurize(s.tokens, i, idx));
  return fs;
}

inline std::vector<FeaturizedSentence> featurize_dataset(const Dataset& d, const FeatureIndex& idx) {
  std::vector<FeaturizedSentence> out;
  out.reserve(d.size());
  for (const auto& s : d.sentences) out.push_back(featurize_sentence(s, idx));
  return out;
}

inline void save_feature_index(const FeatureIndex& idx, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  idx.write(out);
}

inline FeatureIndex load_feature_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return FeatureIndex::read(in);
}

}  // namespace seqal
