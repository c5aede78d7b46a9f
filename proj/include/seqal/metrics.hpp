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

// Evaluation measures and selection-distribution analysis.
//
// Precision/recall with a zero denominator are reported as 0, which is
// what early iterations with tiny labeled sets hit.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seqal/corpus.hpp"
#include "seqal/error.hpp"

namespace seqal {

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

inline PRF make_prf(const Counts& c) {
  PRF r;
  if (c.tp + c.fp) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

namespace detail {

inline void check_aligned(std::span<const TagSequence> pred, std::span<const TagSequence> gold) {
  if (pred.size() != gold.size()) {
    throw ShapeError("metrics: " + std::to_string(pred.size()) + " predicted vs " +
                     std::to_string(gold.size()) + " gold sentences");
  }
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size()) {
      throw ShapeError("metrics: sentence " + std::to_string(s) + " length mismatch");
    }
  }
}

}  // namespace detail

// Token counts with O excluded: equal non-O tags are TP, non-O predicted
// over gold O is FP, O predicted over gold non-O is FN, and a non-O
// mismatch is both FP and FN.
inline Counts token_counts(std::span<const TagSequence> pred, std::span<const TagSequence> gold) {
  detail::check_aligned(pred, gold);
  Counts c;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      const Tag& p = pred[s][i];
      const Tag& g = gold[s][i];
      if (!g.is_outside() && p == g) {
        ++c.tp;
        continue;
      }
      if (!p.is_outside()) ++c.fp;
      if (!g.is_outside()) ++c.fn;
    }
  }
  return c;
}

enum class Averaging { kMicro, kMacro };

// Micro by default. Macro averages per-tag F1 over every non-O tag present
// in either side.
inline PRF token_f1(std::span<const TagSequence> pred, std::span<const TagSequence> gold,
                    Averaging avg = Averaging::kMicro) {
  if (avg == Averaging::kMicro) return make_prf(token_counts(pred, gold));
  detail::check_aligned(pred, gold);
  std::map<std::string, Counts> per_tag;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      const Tag& p = pred[s][i];
      const Tag& g = gold[s][i];
      if (!g.is_outside() && p == g) {
        ++per_tag[g.str()].tp;
        continue;
      }
      if (!p.is_outside()) ++per_tag[p.str()].fp;
      if (!g.is_outside()) ++per_tag[g.str()].fn;
    }
  }
  PRF out;
  if (per_tag.empty()) return out;
  for (const auto& [tag, c] : per_tag) {
    auto r = make_prf(c);
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
  }
  const auto k = static_cast<double>(per_tag.size());
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  return out;
}

// Exact span and type matches, micro-averaged. Orphan I-X tags are read as
// B-X on both sides.
inline Counts entity_counts(std::span<const TagSequence> pred, std::span<const TagSequence> gold) {
  detail::check_aligned(pred, gold);
  Counts c;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const auto ps = extract_entities(repair_bio(pred[s]));
    const auto gs = extract_entities(repair_bio(gold[s]));
    std::set<EntitySpan> gold_set(gs.begin(), gs.end());
    std::size_t hit = 0;
    for (const auto& e : ps) hit += gold_set.count(e);
    c.tp += hit;
    c.fp += ps.size() - hit;
    c.fn += gs.size() - hit;
  }
  return c;
}

inline PRF entity_f1(std::span<const TagSequence> pred, std::span<const TagSequence> gold) {
  return make_prf(entity_counts(pred, gold));
}

// Fraction of sentences tagged exactly right; 0 for an empty set.
inline double sentence_accuracy(std::span<const TagSequence> pred, std::span<const TagSequence> gold) {
  detail::check_aligned(pred, gold);
  if (pred.empty()) return 0;
  std::size_t ok = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) ok += pred[s] == gold[s] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

// Entity type -> share of entity instances. Empty when there are none.
using DistributionSnapshot = std::map<std::string, double>;

inline DistributionSnapshot distribution_from_counts(const std::map<std::string, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [t, n] : counts) total += n;
  DistributionSnapshot snap;
  if (total == 0) return snap;
  for (const auto& [t, n] : counts) {
    if (n) snap[t] = static_cast<double>(n) / static_cast<double>(total);
  }
  return snap;
}

inline std::map<std::string, std::size_t> entity_type_counts(std::span<const LabeledSentence> sentences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s.tags) {
      if (t.is_begin()) ++counts[t.type()];
    }
  }
  return counts;
}

inline DistributionSnapshot distribution_snapshot(std::span<const LabeledSentence> selected) {
  return distribution_from_counts(entity_type_counts(selected));
}

// L1 distance between two snapshots; types missing from one side count as 0.
inline double sampling_offset(const DistributionSnapshot& prev, const DistributionSnapshot& curr) {
  std::set<std::string> types;
  for (const auto& [t, p] : prev) types.insert(t);
  for (const auto& [t, p] : curr) types.insert(t);
  double off = 0;
  for (const auto& t : types) {
    auto a = prev.find(t);
    auto b = curr.find(t);
    off += std::abs((b == curr.end() ? 0.0 : b->second) - (a == prev.end() ? 0.0 : a->second));
  }
  return off;
}

}  // namespace seqal
