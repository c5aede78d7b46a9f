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

// Linear-chain CRF: model, lattices, and exact inference.
//
// A tag sequence y over N positions scores
//   score(y) = sum_i E[i][y_i] + sum_{i<N-1} A[y_i][y_{i+1}]
// and P(y|x) = exp(score(y) - log Z(x)). Recursions run in log space; each
// step factors out the row maximum so only O(N L) exponentials are taken.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "seqal/corpus.hpp"
#include "seqal/error.hpp"
#include "seqal/features.hpp"
#include "seqal/matrix.hpp"

namespace seqal {

// "O" followed by B-X, I-X for every type in schema order.
inline std::vector<Tag> labels_for_schema(std::span<const std::string> schema) {
  std::vector<Tag> labels{Tag::outside()};
  for (const auto& t : schema) {
    labels.push_back(Tag::begin(t));
    labels.push_back(Tag::inside(t));
  }
  return labels;
}

struct CrfModel {
  std::vector<Tag> labels;
  Matrix weights;      // n_features x n_labels
  Matrix transitions;  // n_labels x n_labels, A[from][to]
  double l2_sigma = 1.0;
  // Forbid transitions into I-X except from B-X / I-X, and I-X at position 0.
  bool bio_constraints = false;

  static CrfModel zeros(std::vector<Tag> labels, std::size_t n_features, double l2_sigma = 1.0) {
    CrfModel m;
    const auto L = labels.size();
    m.labels = std::move(labels);
    m.weights = Matrix(n_features, L);
    m.transitions = Matrix(L, L);
    m.l2_sigma = l2_sigma;
    return m;
  }

  std::size_t n_labels() const { return labels.size(); }
  std::size_t n_features() const { return weights.rows(); }

  int label_index(const Tag& t) const {
    auto it = std::find(labels.begin(), labels.end(), t);
    if (it == labels.end()) throw ShapeError("label " + t.str() + " not in model");
    return static_cast<int>(it - labels.begin());
  }

  std::vector<int> encode(std::span<const Tag> tags) const {
    std::vector<int> out;
    out.reserve(tags.size());
    for (const auto& t : tags) out.push_back(label_index(t));
    return out;
  }

  TagSequence decode_labels(std::span<const int> path) const {
    TagSequence out;
    out.reserve(path.size());
    for (int j : path) out.push_back(labels.at(static_cast<std::size_t>(j)));
    return out;
  }

  bool operator==(const CrfModel&) const = default;
};

struct Lattice {
  Matrix emissions;    // N x L log-potentials
  Matrix transitions;  // L x L

  std::size_t length() const { return emissions.rows(); }
  std::size_t n_labels() const { return emissions.cols(); }
};

// True when the transition from label `from` into `to` violates BIO.
inline bool bio_forbidden(const Tag& from, const Tag& to) {
  if (!to.is_inside()) return false;
  return from.is_outside() || from.type() != to.type();
}

inline void apply_bio_constraints(Lattice& lat, std::span<const Tag> labels) {
  const auto L = labels.size();
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = 0; b < L; ++b) {
      if (bio_forbidden(labels[a], labels[b])) lat.transitions(a, b) = kNegInf;
    }
  }
  for (std::size_t b = 0; b < L; ++b) {
    if (labels[b].is_inside()) lat.emissions(0, b) = kNegInf;
  }
}

// Emission log-score [i][j] = sum of W[f][j] over features f active at i.
inline Lattice build_lattice(const CrfModel& m, const FeaturizedSentence& fs) {
  if (fs.size() == 0) throw ShapeError("sentence " + std::to_string(fs.id) + " is empty");
  const auto L = m.n_labels();
  if (m.weights.cols() != L || m.transitions.rows() != L || m.transitions.cols() != L) {
    throw ShapeError("model matrices do not match label count");
  }
  Lattice lat{Matrix(fs.size(), L), m.transitions};
  for (std::size_t i = 0; i < fs.size(); ++i) {
    auto row = lat.emissions.row(i);
    for (int f : fs.features[i]) {
      if (f < 0 || static_cast<std::size_t>(f) >= m.n_features()) {
        throw ShapeError("sentence " + std::to_string(fs.id) + ": feature id " + std::to_string(f) +
                         " out of range");
      }
      auto w = m.weights.row(static_cast<std::size_t>(f));
      for (std::size_t j = 0; j < L; ++j) row[j] += w[j];
    }
  }
  if (m.bio_constraints) apply_bio_constraints(lat, m.labels);
  return lat;
}

// Lattice from externally computed emission scores; transitions from `m`.
inline Lattice lattice_from_emissions(const CrfModel& m, Matrix emissions) {
  if (emissions.cols() != m.n_labels()) {
    throw ShapeError("emission matrix has " + std::to_string(emissions.cols()) + " columns, model has " +
                     std::to_string(m.n_labels()) + " labels");
  }
  if (emissions.rows() == 0) throw ShapeError("empty emission matrix");
  Lattice lat{std::move(emissions), m.transitions};
  if (m.bio_constraints) apply_bio_constraints(lat, m.labels);
  return lat;
}

inline double path_score(const Lattice& lat, std::span<const int> path) {
  double s = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    s += lat.emissions(i, static_cast<std::size_t>(path[i]));
    if (i > 0) s += lat.transitions(static_cast<std::size_t>(path[i - 1]), static_cast<std::size_t>(path[i]));
  }
  return s;
}

struct ForwardBackward {
  double log_z = 0;
  Matrix marginals;               // N x L, P(y_i = j | x)
  std::vector<Matrix> pairwise;   // N-1 of L x L, P(y_k = a, y_k+1 = b | x)
};

namespace detail {

struct ScaledTransitions {
  Matrix exp_a;  // exp(A - shift)
  double shift = 0;
};

inline ScaledTransitions scale_transitions(const Matrix& a) {
  double shift = kNegInf;
  for (double v : a.data()) shift = std::max(shift, v);
  if (shift == kNegInf) shift = 0;
  ScaledTransitions st{Matrix(a.rows(), a.cols()), shift};
  for (std::size_t i = 0; i < a.size(); ++i) st.exp_a.data()[i] = std::exp(a.data()[i] - shift);
  return st;
}

inline double row_max(std::span<const double> r) {
  double m = kNegInf;
  for (double v : r) m = std::max(m, v);
  return m;
}

struct AlphaBeta {
  Matrix alpha;
  Matrix beta;
  double log_z;
};

inline AlphaBeta alpha_beta(const Lattice& lat, const ScaledTransitions& st) {
  const auto N = lat.length(), L = lat.n_labels();
  AlphaBeta ab{Matrix(N, L), Matrix(N, L), 0};
  std::vector<double> p(L);

  for (std::size_t j = 0; j < L; ++j) ab.alpha(0, j) = lat.emissions(0, j);
  for (std::size_t i = 1; i < N; ++i) {
    const double m = row_max(ab.alpha.row(i - 1));
    if (m == kNegInf) {
      for (std::size_t j = 0; j < L; ++j) ab.alpha(i, j) = kNegInf;
      continue;
    }
    for (std::size_t k = 0; k < L; ++k) p[k] = std::exp(ab.alpha(i - 1, k) - m);
    for (std::size_t j = 0; j < L; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < L; ++k) s += p[k] * st.exp_a(k, j);
      ab.alpha(i, j) = lat.emissions(i, j) + m + st.shift + std::log(s);
    }
  }

  for (std::size_t j = 0; j < L; ++j) ab.beta(N - 1, j) = 0;
  for (std::size_t i = N - 1; i-- > 0;) {
    double m = kNegInf;
    for (std::size_t j = 0; j < L; ++j) m = std::max(m, lat.emissions(i + 1, j) + ab.beta(i + 1, j));
    if (m == kNegInf) {
      for (std::size_t k = 0; k < L; ++k) ab.beta(i, k) = kNegInf;
      continue;
    }
    for (std::size_t j = 0; j < L; ++j) p[j] = std::exp(lat.emissions(i + 1, j) + ab.beta(i + 1, j) - m);
    for (std::size_t k = 0; k < L; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < L; ++j) s += st.exp_a(k, j) * p[j];
      ab.beta(i, k) = m + st.shift + std::log(s);
    }
  }
  ab.log_z = log_sum_exp(ab.alpha.row(N - 1));
  return ab;
}

}  // namespace detail

// log Z, unary marginals and (optionally) adjacent-pair marginals.
inline ForwardBackward forward_backward(const Lattice& lat, bool with_pairwise = true) {
  const auto N = lat.length(), L = lat.n_labels();
  const auto st = detail::scale_transitions(lat.transitions);
  const auto ab = detail::alpha_beta(lat, st);

  ForwardBackward fb{ab.log_z, Matrix(N, L), {}};
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      fb.marginals(i, j) = std::exp(ab.alpha(i, j) + ab.beta(i, j) - ab.log_z);
    }
  }
  if (!with_pairwise) return fb;

  fb.pairwise.reserve(N > 0 ? N - 1 : 0);
  std::vector<double> left(L), right(L);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double m1 = detail::row_max(ab.alpha.row(i));
    double m2 = kNegInf;
    for (std::size_t b = 0; b < L; ++b) m2 = std::max(m2, lat.emissions(i + 1, b) + ab.beta(i + 1, b));
    for (std::size_t a = 0; a < L; ++a) left[a] = std::exp(ab.alpha(i, a) - m1);
    for (std::size_t b = 0; b < L; ++b) right[b] = std::exp(lat.emissions(i + 1, b) + ab.beta(i + 1, b) - m2);
    const double scale = std::exp(m1 + m2 + st.shift - ab.log_z);
    Matrix pw(L, L);
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) pw(a, b) = left[a] * st.exp_a(a, b) * right[b] * scale;
    }
    fb.pairwise.push_back(std::move(pw));
  }
  return fb;
}

struct ViterbiResult {
  std::vector<int> path;
  double path_logscore = 0;
};

// Highest-scoring path. Ties go to the lower label index, both for the final
// label and at every back-pointer.
inline ViterbiResult viterbi(const Lattice& lat) {
  const auto N = lat.length(), L = lat.n_labels();
  Matrix delta(N, L);
  std::vector<int> back(N * L, 0);
  for (std::size_t j = 0; j < L; ++j) delta(0, j) = lat.emissions(0, j);
  for (std::size_t i = 1; i < N; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (std::size_t k = 0; k < L; ++k) {
        const double v = delta(i - 1, k) + lat.transitions(k, j);
        if (v > best) {
          best = v;
          arg = static_cast<int>(k);
        }
      }
      delta(i, j) = best + lat.emissions(i, j);
      back[i * L + j] = arg;
    }
  }
  ViterbiResult r;
  r.path.assign(N, 0);
  double best = kNegInf;
  for (std::size_t j = 0; j < L; ++j) {
    if (delta(N - 1, j) > best) {
      best = delta(N - 1, j);
      r.path[N - 1] = static_cast<int>(j);
    }
  }
  r.path_logscore = best;
  for (std::size_t i = N - 1; i > 0; --i) {
    r.path[i - 1] = back[i * L + static_cast<std::size_t>(r.path[i])];
  }
  return r;
}

struct DecodeResult {
  std::vector<int> path;
  double path_logscore = 0;
  double log_z = 0;
  Matrix marginals;         // CRF posterior marginals
  Matrix emission_softmax;  // per-position softmax of emission scores alone

  std::size_t length() const { return path.size(); }
  // P(y* | x)
  double path_probability() const { return std::exp(path_logscore - log_z); }
};

inline DecodeResult decode_lattice(const Lattice& lat) {
  auto vit = viterbi(lat);
  auto fb = forward_backward(lat, /*with_pairwise=*/false);
  if (!std::isfinite(fb.log_z)) throw Error("decode: partition function is not finite");
  DecodeResult dr;
  dr.path = std::move(vit.path);
  dr.path_logscore = vit.path_logscore;
  dr.log_z = fb.log_z;
  dr.marginals = std::move(fb.marginals);
  dr.emission_softmax = Matrix(lat.length(), lat.n_labels());
  for (std::size_t i = 0; i < lat.length(); ++i) {
    auto sm = softmax(lat.emissions.row(i));
    std::copy(sm.begin(), sm.end(), dr.emission_softmax.row(i).begin());
  }
  return dr;
}

inline DecodeResult decode(const CrfModel& m, const FeaturizedSentence& fs) {
  return decode_lattice(build_lattice(m, fs));
}

}  // namespace seqal
