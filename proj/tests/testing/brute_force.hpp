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

// Exhaustive-enumeration oracles for small lattices. These deliberately
// avoid every library routine except the Matrix container.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "seqal/crf.hpp"

namespace seqal::testing {

struct BruteForce {
  double z = 0;                            // sum over paths of exp(score)
  Matrix marginals;                        // N x L
  std::vector<int> best_path;
  double best_score = -INFINITY;
  std::vector<std::vector<int>> paths;     // all paths, lexicographic
  std::vector<double> scores;
};

inline double score_of(const Matrix& em, const Matrix& tr, const std::vector<int>& y) {
  double s = em(0, y[0]);
  for (std::size_t k = 1; k < y.size(); ++k) s += em(k, y[k]) + tr(y[k - 1], y[k]);
  return s;
}

inline BruteForce enumerate(const Matrix& em, const Matrix& tr) {
  const std::size_t N = em.rows(), L = em.cols();
  BruteForce bf;
  bf.marginals = Matrix(N, L);
  std::size_t total = 1;
  for (std::size_t i = 0; i < N; ++i) total *= L;
  std::vector<int> y(N, 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t k = N; k-- > 0;) {
      y[k] = static_cast<int>(c % L);
      c /= L;
    }
    const double s = score_of(em, tr, y);
    bf.paths.push_back(y);
    bf.scores.push_back(s);
    bf.z += std::exp(s);
    if (s > bf.best_score) {
      bf.best_score = s;
      bf.best_path = y;
    }
  }
  for (std::size_t p = 0; p < bf.paths.size(); ++p) {
    const double prob = std::exp(bf.scores[p]) / bf.z;
    for (std::size_t i = 0; i < N; ++i) bf.marginals(i, bf.paths[p][i]) += prob;
  }
  return bf;
}

inline Lattice random_lattice(std::mt19937_64& gen, std::size_t N, std::size_t L, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Lattice lat{Matrix(N, L), Matrix(L, L)};
  for (auto& v : lat.emissions.data()) v = u(gen);
  for (auto& v : lat.transitions.data()) v = u(gen);
  return lat;
}

inline Lattice uniform_lattice(std::size_t N, std::size_t L) { return {Matrix(N, L), Matrix(L, L)}; }

}  // namespace seqal::testing
