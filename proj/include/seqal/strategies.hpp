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

// Query strategies: informativeness scores over decoded sentences and
// top-b batch selection.
//
//   LC   1 - P(y*|x)
//   NLC  1 - P(y*|x)^(1/n)      (geometric_mean, default)
//        1 - P(y*|x) / n        (literal)
//   MTP  1 - min_i max_j h[i][j]
//   LTP  1 - min_i h[i][y*_i]
//   RAND uniform [0, 1)
//
// h is either the CRF posterior marginal (default) or the per-position
// softmax of emission scores.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqal/crf.hpp"
#include "seqal/error.hpp"
#include "seqal/random.hpp"

namespace seqal {

enum class Strategy { kRand, kLc, kNlc, kMtp, kLtp };
enum class HMode { kPosteriorMarginal, kEmissionSoftmax };
enum class NlcMode { kGeometricMean, kLiteral };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kRand: return "RAND";
    case Strategy::kLc: return "LC";
    case Strategy::kNlc: return "NLC";
    case Strategy::kMtp: return "MTP";
    case Strategy::kLtp: return "LTP";
  }
  return "?";
}

inline std::string to_string(HMode m) {
  return m == HMode::kPosteriorMarginal ? "posterior_marginal" : "emission_softmax";
}

inline std::string to_string(NlcMode m) { return m == NlcMode::kGeometricMean ? "geometric_mean" : "literal"; }

inline Strategy parse_strategy(std::string_view s) {
  for (auto v : {Strategy::kRand, Strategy::kLc, Strategy::kNlc, Strategy::kMtp, Strategy::kLtp}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected RAND, LC, NLC, MTP or LTP)");
}

inline HMode parse_h_mode(std::string_view s) {
  if (s == "posterior_marginal") return HMode::kPosteriorMarginal;
  if (s == "emission_softmax") return HMode::kEmissionSoftmax;
  throw ConfigError("unknown h_mode '" + std::string(s) + "'");
}

inline NlcMode parse_nlc_mode(std::string_view s) {
  if (s == "geometric_mean") return NlcMode::kGeometricMean;
  if (s == "literal") return NlcMode::kLiteral;
  throw ConfigError("unknown nlc_mode '" + std::string(s) + "'");
}

struct StrategyConfig {
  Strategy strategy = Strategy::kLtp;
  HMode h_mode = HMode::kPosteriorMarginal;
  NlcMode nlc_mode = NlcMode::kGeometricMean;
  std::uint64_t seed = 0;

  bool needs_decoding() const { return strategy != Strategy::kRand; }
};

struct SelectionScore {
  int sentence_id = 0;
  Strategy strategy = Strategy::kLtp;
  double score = 0;
};

namespace detail {

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

inline const Matrix& token_probabilities(const DecodeResult& dr, HMode mode) {
  return mode == HMode::kPosteriorMarginal ? dr.marginals : dr.emission_softmax;
}

}  // namespace detail

inline double score_lc(const DecodeResult& dr) {
  return detail::clamp_unit(1.0 - std::exp(dr.path_logscore - dr.log_z));
}

inline double score_nlc(const DecodeResult& dr, std::size_t n, NlcMode mode = NlcMode::kGeometricMean) {
  if (n == 0) throw Error("score_nlc: empty sentence");
  const double nd = static_cast<double>(n);
  if (mode == NlcMode::kGeometricMean) {
    return detail::clamp_unit(1.0 - std::exp((dr.path_logscore - dr.log_z) / nd));
  }
  return detail::clamp_unit(1.0 - std::exp(dr.path_logscore - dr.log_z) / nd);
}

inline double score_mtp(const DecodeResult& dr, HMode mode = HMode::kPosteriorMarginal) {
  const Matrix& h = detail::token_probabilities(dr, mode);
  double lowest = 1.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    auto r = h.row(i);
    lowest = std::min(lowest, *std::max_element(r.begin(), r.end()));
  }
  return detail::clamp_unit(1.0 - lowest);
}

inline double score_ltp(const DecodeResult& dr, HMode mode = HMode::kPosteriorMarginal) {
  const Matrix& h = detail::token_probabilities(dr, mode);
  double lowest = 1.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    lowest = std::min(lowest, h(i, static_cast<std::size_t>(dr.path[i])));
  }
  return detail::clamp_unit(1.0 - lowest);
}

// Position of the token LTP keys on (lowest Viterbi-label probability).
inline std::size_t ltp_argmin(const DecodeResult& dr, HMode mode = HMode::kPosteriorMarginal) {
  const Matrix& h = detail::token_probabilities(dr, mode);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < h.rows(); ++i) {
    if (h(i, static_cast<std::size_t>(dr.path[i])) < h(arg, static_cast<std::size_t>(dr.path[arg]))) arg = i;
  }
  return arg;
}

inline double score_rand(Rng& rng) { return rng.uniform(); }

// Uncertainty score of one decoded sentence under `cfg` (not RAND).
inline double score_decoded(const StrategyConfig& cfg, const DecodeResult& dr) {
  switch (cfg.strategy) {
    case Strategy::kLc: return score_lc(dr);
    case Strategy::kNlc: return score_nlc(dr, dr.length(), cfg.nlc_mode);
    case Strategy::kMtp: return score_mtp(dr, cfg.h_mode);
    case Strategy::kLtp: return score_ltp(dr, cfg.h_mode);
    case Strategy::kRand: break;
  }
  throw Error("score_decoded: RAND does not score decoded sentences");
}

// Scores a pool. `ids` must be sorted ascending; RAND draws are consumed in
// that order from a generator seeded with cfg.seed. For the other strategies
// `decoded[k]` belongs to `ids[k]`.
inline std::vector<SelectionScore> score_pool(const StrategyConfig& cfg, std::span<const int> ids,
                                              std::span<const DecodeResult> decoded) {
  std::vector<SelectionScore> out;
  out.reserve(ids.size());
  if (cfg.strategy == Strategy::kRand) {
    Rng rng(cfg.seed);
    for (int id : ids) out.push_back({id, cfg.strategy, score_rand(rng)});
    return out;
  }
  if (decoded.size() != ids.size()) throw ShapeError("score_pool: decoded results do not match ids");
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out.push_back({ids[k], cfg.strategy, score_decoded(cfg, decoded[k])});
  }
  return out;
}

// Ids of the b highest scores, ties to the lower id, in selection order.
inline std::vector<int> select_batch(std::span<const SelectionScore> scores, std::size_t b) {
  if (scores.empty()) throw Error("select_batch: empty pool");
  if (b == 0) throw Error("select_batch: batch size must be >= 1");
  std::vector<SelectionScore> sorted(scores.begin(), scores.end());
  const auto take = std::min(b, sorted.size());
  auto better = [](const SelectionScore& a, const SelectionScore& c) {
    if (a.score != c.score) return a.score > c.score;
    return a.sentence_id < c.sentence_id;
  };
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take), sorted.end(), better);
  std::vector<int> ids;
  ids.reserve(take);
  for (std::size_t k = 0; k < take; ++k) ids.push_back(sorted[k].sentence_id);
  return ids;
}

}  // namespace seqal
