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

// Seeded generator for BIO corpora with controllable entity-type imbalance.
//
// Recipe, per sentence:
//   * filler length drawn uniformly from [min_length, max_length];
//   * entity count ~ Binomial(max_entities, mean_entities / max_entities);
//   * each entity picks a type by weight, a length in [1, max_entity_length],
//     and Zipf-distributed words from the type's lexicon; with probability
//     cue_prob it is preceded by one of the type's cue words (tagged O);
//   * entities are placed in distinct gaps between Zipf-distributed filler
//     words, so two entities are never adjacent.
// Lexicon words mostly share a type-specific ending; a fraction `ambiguity`
// of them are borrowed from the filler vocabulary or another type.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "seqal/config.hpp"
#include "seqal/corpus.hpp"
#include "seqal/error.hpp"
#include "seqal/random.hpp"

namespace seqal {

struct EntityTypeSpec {
  std::string name;
  double weight = 1.0;
};

struct SyntheticConfig {
  std::size_t n_sentences = 1000;
  std::vector<EntityTypeSpec> types;
  std::size_t min_length = 4;
  std::size_t max_length = 18;
  double mean_entities = 1.5;
  std::size_t max_entities = 4;
  std::size_t max_entity_length = 3;
  std::size_t filler_vocab = 600;
  std::size_t lexicon_size = 60;
  double cue_prob = 0.5;
  double ambiguity = 0.1;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;
  // Return an empty dataset for n_sentences == 0 instead of throwing.
  bool allow_empty = false;
};

// Parses "NAME:weight,NAME:weight,...".
inline std::vector<EntityTypeSpec> parse_type_weights(const std::vector<std::string>& items) {
  std::vector<EntityTypeSpec> out;
  for (const auto& item : items) {
    auto colon = item.rfind(':');
    EntityTypeSpec spec;
    spec.name = item.substr(0, colon);
    if (colon != std::string::npos) {
      try {
        spec.weight = std::stod(item.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad type weight '" + item + "'");
      }
    }
    if (spec.name.empty()) throw ConfigError("empty entity type name in '" + item + "'");
    out.push_back(spec);
  }
  return out;
}

inline SyntheticConfig synthetic_config_from(const KeyValueConfig& kv) {
  SyntheticConfig c;
  c.n_sentences = kv.get<std::size_t>("n_sentences", c.n_sentences);
  c.types = parse_type_weights(kv.get_list("types", {}));
  c.min_length = kv.get<std::size_t>("min_length", c.min_length);
  c.max_length = kv.get<std::size_t>("max_length", c.max_length);
  c.mean_entities = kv.get<double>("mean_entities", c.mean_entities);
  c.max_entities = kv.get<std::size_t>("max_entities", c.max_entities);
  c.max_entity_length = kv.get<std::size_t>("max_entity_length", c.max_entity_length);
  c.filler_vocab = kv.get<std::size_t>("filler_vocab", c.filler_vocab);
  c.lexicon_size = kv.get<std::size_t>("lexicon_size", c.lexicon_size);
  c.cue_prob = kv.get<double>("cue_prob", c.cue_prob);
  c.ambiguity = kv.get<double>("ambiguity", c.ambiguity);
  c.zipf_exponent = kv.get<double>("zipf_exponent", c.zipf_exponent);
  c.seed = kv.get<std::uint64_t>("seed", c.seed);
  c.allow_empty = kv.get<bool>("allow_empty", c.allow_empty);
  return c;
}

namespace detail {

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
      cdf_[i] = acc;
    }
    for (auto& v : cdf_) v /= acc;
  }
  std::size_t draw(Rng& rng) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), rng.uniform());
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

inline std::string random_syllables(Rng& rng, std::size_t n) {
  static constexpr std::string_view kOnset = "bdfgklmnprstvz";
  static constexpr std::string_view kVowel = "aeiou";
  std::string w;
  for (std::size_t i = 0; i < n; ++i) {
    w += kOnset[rng.below(kOnset.size())];
    w += kVowel[rng.below(kVowel.size())];
  }
  return w;
}

// Distinct words not yet in `taken`.
inline std::vector<std::string> make_words(Rng& rng, std::size_t count, const std::string& ending,
                                           double ending_prob,
                                           std::unordered_set<std::string>& taken) {
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w = random_syllables(rng, 1 + rng.below(3));
    if (!ending.empty() && rng.uniform() < ending_prob) w += ending;
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.types.empty()) throw ConfigError("synthetic corpus: empty schema");
  for (const auto& t : cfg.types) {
    if (!(t.weight > 0)) throw ConfigError("synthetic corpus: weight of " + t.name + " must be > 0");
  }
  if (cfg.min_length < 1 || cfg.max_length < cfg.min_length || cfg.max_entity_length < 1) {
    throw ConfigError("synthetic corpus: lengths must satisfy 1 <= min_length <= max_length");
  }
  if (cfg.filler_vocab < 1 || cfg.lexicon_size < 1) {
    throw ConfigError("synthetic corpus: vocabulary sizes must be >= 1");
  }
  if (cfg.n_sentences == 0) {
    if (cfg.allow_empty) return {};
    throw ConfigError("synthetic corpus: n_sentences must be > 0");
  }

  Rng rng(cfg.seed);
  std::unordered_set<std::string> taken;
  const auto filler = detail::make_words(rng, cfg.filler_vocab, "", 0.0, taken);

  const std::size_t n_types = cfg.types.size();
  std::vector<std::vector<std::string>> lexicon(n_types), cues(n_types);
  std::vector<std::size_t> max_len(n_types);
  for (std::size_t t = 0; t < n_types; ++t) {
    const std::string ending = detail::random_syllables(rng, 2);
    lexicon[t] = detail::make_words(rng, cfg.lexicon_size, ending, 0.6, taken);
    cues[t] = detail::make_words(rng, 3, "", 0.0, taken);
    max_len[t] = 1 + rng.below(cfg.max_entity_length);
  }
  // Borrow words across lexicons and from the filler vocabulary.
  for (std::size_t t = 0; t < n_types; ++t) {
    for (auto& w : lexicon[t]) {
      if (rng.uniform() >= cfg.ambiguity) continue;
      if (n_types > 1 && rng.uniform() < 0.5) {
        std::size_t other = (t + 1 + rng.below(n_types - 1)) % n_types;
        w = lexicon[other][rng.below(lexicon[other].size())];
      } else {
        w = filler[rng.below(std::min<std::size_t>(filler.size(), 50))];
      }
    }
  }

  std::vector<double> type_cdf(n_types);
  double total = 0;
  for (std::size_t t = 0; t < n_types; ++t) type_cdf[t] = (total += cfg.types[t].weight);
  auto draw_type = [&] {
    double u = rng.uniform() * total;
    auto it = std::upper_bound(type_cdf.begin(), type_cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - type_cdf.begin()), n_types - 1);
  };

  const detail::ZipfSampler filler_zipf(filler.size(), cfg.zipf_exponent);
  const detail::ZipfSampler lexicon_zipf(cfg.lexicon_size, cfg.zipf_exponent);
  const double p_entity =
      cfg.max_entities ? std::clamp(cfg.mean_entities / static_cast<double>(cfg.max_entities), 0.0, 1.0)
                       : 0.0;

  Dataset d;
  std::unordered_set<std::string> seen;
  for (std::size_t s = 0; s < cfg.n_sentences; ++s) {
    const auto n_filler = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(cfg.min_length), static_cast<std::int64_t>(cfg.max_length)));
    std::size_t k = 0;
    for (std::size_t i = 0; i < cfg.max_entities; ++i) k += rng.uniform() < p_entity ? 1 : 0;
    k = std::min(k, n_filler + 1);

    // Choose k distinct gaps among n_filler + 1.
    std::vector<std::size_t> gaps(n_filler + 1);
    for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = i;
    rng.shuffle(gaps);
    gaps.resize(k);
    std::sort(gaps.begin(), gaps.end());

    LabeledSentence sent;
    sent.id = static_cast<int>(s);
    auto emit_entity = [&] {
      const std::size_t t = draw_type();
      if (rng.uniform() < cfg.cue_prob) {
        sent.tokens.push_back(cues[t][rng.below(cues[t].size())]);
        sent.tags.push_back(Tag::outside());
      }
      const auto len = 1 + rng.below(max_len[t]);
      for (std::size_t j = 0; j < len; ++j) {
        sent.tokens.push_back(lexicon[t][lexicon_zipf.draw(rng)]);
        sent.tags.push_back(j == 0 ? Tag::begin(cfg.types[t].name) : Tag::inside(cfg.types[t].name));
      }
    };
    std::size_t g = 0;
    for (std::size_t pos = 0; pos <= n_filler; ++pos) {
      if (g < gaps.size() && gaps[g] == pos) {
        emit_entity();
        ++g;
      }
      if (pos < n_filler) {
        sent.tokens.push_back(filler[filler_zipf.draw(rng)]);
        sent.tags.push_back(Tag::outside());
      }
    }
    for (const auto& tag : sent.tags) {
      if (!tag.is_outside() && seen.insert(tag.type()).second) d.schema.push_back(tag.type());
    }
    d.sentences.push_back(std::move(sent));
  }
  return d;
}

}  // namespace seqal
