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

// Maximum-likelihood training for the linear-chain CRF with a Gaussian prior:
//
//   l(theta) = sum_l log P(y_l | x_l) - ||theta||^2 / (2 sigma^2)
//
// maximized by L-BFGS with a backtracking (Armijo) line search.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "seqal/crf.hpp"
#include "seqal/error.hpp"

namespace seqal {

struct TrainingExample {
  FeaturizedSentence sentence;
  std::vector<int> gold;  // label indices, one per token
};

struct CrfGradient {
  Matrix weights;
  Matrix transitions;
};

struct Objective {
  double value = 0;
  CrfGradient gradient;
};

// Penalized log-likelihood of `batch` and its gradient w.r.t. W and A.
inline Objective log_likelihood_and_gradient(const CrfModel& m, std::span<const TrainingExample> batch) {
  const auto L = m.n_labels();
  Objective obj{0, {Matrix(m.n_features(), L), Matrix(L, L)}};
  auto& gw = obj.gradient.weights;
  auto& ga = obj.gradient.transitions;

  for (const auto& ex : batch) {
    if (ex.gold.size() != ex.sentence.size()) {
      throw ShapeError("sentence " + std::to_string(ex.sentence.id) + ": gold length mismatch");
    }
    for (int y : ex.gold) {
      if (y < 0 || static_cast<std::size_t>(y) >= L) {
        throw ShapeError("sentence " + std::to_string(ex.sentence.id) + ": label out of range");
      }
    }
    const Lattice lat = build_lattice(m, ex.sentence);
    const ForwardBackward fb = forward_backward(lat);
    obj.value += path_score(lat, ex.gold) - fb.log_z;

    for (std::size_t i = 0; i < ex.sentence.size(); ++i) {
      const auto gold = static_cast<std::size_t>(ex.gold[i]);
      auto marg = fb.marginals.row(i);
      for (int f : ex.sentence.features[i]) {
        auto g = gw.row(static_cast<std::size_t>(f));
        for (std::size_t j = 0; j < L; ++j) g[j] -= marg[j];
        g[gold] += 1.0;
      }
    }
    for (std::size_t k = 0; k < fb.pairwise.size(); ++k) {
      const auto& pw = fb.pairwise[k];
      for (std::size_t t = 0; t < L * L; ++t) ga.data()[t] -= pw.data()[t];
      ga(static_cast<std::size_t>(ex.gold[k]), static_cast<std::size_t>(ex.gold[k + 1])) += 1.0;
    }
  }

  const double inv_var = 1.0 / (m.l2_sigma * m.l2_sigma);
  obj.value -= 0.5 * inv_var * (squared_norm(m.weights.data()) + squared_norm(m.transitions.data()));
  for (std::size_t t = 0; t < gw.size(); ++t) gw.data()[t] -= inv_var * m.weights.data()[t];
  for (std::size_t t = 0; t < ga.size(); ++t) ga.data()[t] -= inv_var * m.transitions.data()[t];
  return obj;
}

struct TrainOptions {
  std::size_t max_iterations = 100;
  // Stop when ||grad|| <= gradient_tolerance * max(1, ||theta||).
  double gradient_tolerance = 1e-5;
  // Stop when an accepted step improves the objective by less than this
  // fraction of max(1, |objective|). 0 disables.
  double min_relative_improvement = 0;
  std::size_t memory = 10;
  std::size_t max_line_search = 40;
};

struct TrainStats {
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double objective = 0;
  double gradient_norm = 0;
  std::vector<double> trace;  // objective after each accepted step, starting with init
};

namespace detail {

// Features that fire anywhere in the batch, sorted.
inline std::vector<int> active_features(std::span<const TrainingExample> batch, std::size_t n_features) {
  std::vector<char> on(n_features, 0);
  for (const auto& ex : batch) {
    for (const auto& pos : ex.sentence.features) {
      for (int f : pos) {
        if (f < 0 || static_cast<std::size_t>(f) >= n_features) {
          throw ShapeError("sentence " + std::to_string(ex.sentence.id) + ": feature id out of range");
        }
        on[static_cast<std::size_t>(f)] = 1;
      }
    }
  }
  std::vector<int> out;
  for (std::size_t f = 0; f < n_features; ++f) {
    if (on[f]) out.push_back(static_cast<int>(f));
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace detail

// Fits `init` to `examples`. Optimization runs over the rows of W whose
// features occur in the batch; every other row is set to 0, the maximizer
// of its (purely regularizing) term. Deterministic for fixed inputs.
inline CrfModel train(const CrfModel& init, std::span<const TrainingExample> examples,
                      const TrainOptions& opts = {}, TrainStats* stats = nullptr) {
  if (examples.empty()) throw Error("train: empty labeled set");
  if (opts.max_iterations == 0) return init;
  const auto L = init.n_labels();

  // Compact problem.
  const auto active = detail::active_features(examples, init.n_features());
  std::vector<int> remap(init.n_features(), -1);
  for (std::size_t i = 0; i < active.size(); ++i) remap[static_cast<std::size_t>(active[i])] = static_cast<int>(i);
  std::vector<TrainingExample> batch;
  batch.reserve(examples.size());
  for (const auto& ex : examples) {
    TrainingExample c{{ex.sentence.id, ex.sentence.features}, ex.gold};
    for (auto& pos : c.sentence.features) {
      for (auto& f : pos) f = remap[static_cast<std::size_t>(f)];
    }
    batch.push_back(std::move(c));
  }
  CrfModel work = CrfModel::zeros(init.labels, active.size(), init.l2_sigma);
  work.bio_constraints = init.bio_constraints;
  for (std::size_t i = 0; i < active.size(); ++i) {
    auto src = init.weights.row(static_cast<std::size_t>(active[i]));
    std::copy(src.begin(), src.end(), work.weights.row(i).begin());
  }
  work.transitions = init.transitions;

  const std::size_t nw = work.weights.size();
  const std::size_t n = nw + L * L;
  auto load = [&](std::span<const double> x) {
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nw), work.weights.data().begin());
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(nw), x.end(), work.transitions.data().begin());
  };
  TrainStats st;
  // Minimizes the negated objective.
  auto evaluate = [&](std::span<const double> x, std::vector<double>& grad) {
    load(x);
    auto obj = log_likelihood_and_gradient(work, batch);
    ++st.evaluations;
    grad.resize(n);
    auto gw = obj.gradient.weights.data();
    auto ga = obj.gradient.transitions.data();
    for (std::size_t i = 0; i < nw; ++i) grad[i] = -gw[i];
    for (std::size_t i = 0; i < L * L; ++i) grad[nw + i] = -ga[i];
    return -obj.value;
  };

  std::vector<double> x(n), g, x_new(n), g_new, d(n);
  std::copy(work.weights.data().begin(), work.weights.data().end(), x.begin());
  std::copy(work.transitions.data().begin(), work.transitions.data().end(), x.begin() + static_cast<std::ptrdiff_t>(nw));
  double f = evaluate(x, g);
  if (!std::isfinite(f)) throw TrainingDiverged("train: initial objective is not finite");
  st.trace.push_back(-f);

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> alpha(opts.memory);
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const double gnorm = std::sqrt(detail::dot(g, g));
    if (gnorm <= opts.gradient_tolerance * std::max(1.0, std::sqrt(detail::dot(x, x)))) break;

    // Two-loop recursion: d = -H g.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * detail::dot(S[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * Y[k][i];
    }
    if (!S.empty()) {
      const double gamma = detail::dot(S.back(), Y.back()) / detail::dot(Y.back(), Y.back());
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * detail::dot(Y[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * S[k][i];
    }
    double slope = detail::dot(g, d);
    if (!(slope < 0)) {
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = -gnorm * gnorm;
    }

    double step = S.empty() ? 1.0 / std::max(1.0, gnorm) : 1.0;
    bool accepted = false;
    double f_new = 0;
    for (std::size_t ls = 0; ls < opts.max_line_search; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = evaluate(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-10) {
      if (S.size() == opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    const double improvement = (f - f_new) / std::max(1.0, std::abs(f));
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    st.trace.push_back(-f);
    ++st.iterations;
    if (improvement < opts.min_relative_improvement) break;
  }

  load(x);
  st.objective = -f;
  st.gradient_norm = std::sqrt(detail::dot(g, g));
  if (stats) *stats = std::move(st);

  CrfModel out = init;
  out.weights.fill(0.0);
  for (std::size_t i = 0; i < active.size(); ++i) {
    auto src = work.weights.row(i);
    std::copy(src.begin(), src.end(), out.weights.row(static_cast<std::size_t>(active[i])).begin());
  }
  out.transitions = work.transitions;
  return out;
}

// Convenience: examples from sentences with gold tags.
inline std::vector<TrainingExample> make_examples(const CrfModel& m, const Dataset& d,
                                                  const std::vector<FeaturizedSentence>& featurized) {
  if (featurized.size() != d.size()) throw ShapeError("make_examples: featurized size mismatch");
  std::vector<TrainingExample> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back({featurized[i], m.encode(d.sentences[i].tags)});
  return out;
}

}  // namespace seqal
