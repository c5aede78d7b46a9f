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

// Multi-seed, multi-strategy simulation with the gold oracle.
//
// Config keys (key = value):
//   corpus            CoNLL file (or `synthetic`, a generator config file)
//   test_corpus       optional separate test file; otherwise test_size
//                     sentences are split off the corpus per seed
//   strategies        comma list of RAND, LC, NLC, MTP, LTP
//   batch_size        B                          (default 200)
//   iterations        AL iterations per run      (default 12)
//   seeds             random initial splits      (default 10)
//   initial_labeled   |L_1|                      (default 99)
//   test_size         held-out sentences         (default 1000)
//   base_seed         (default 0)
//   h_mode            posterior_marginal | emission_softmax
//   nlc_mode          geometric_mean | literal
//   features          feature template spec      (default all)
//   l2_sigma, max_train_iterations, train_gradient_tolerance,
//   train_min_improvement, bio_constraints, warm_start, repair

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "seqal/config.hpp"
#include "seqal/corpus.hpp"
#include "seqal/crf_io.hpp"
#include "seqal/loop.hpp"
#include "seqal/state_io.hpp"
#include "seqal/strategies.hpp"
#include "seqal/synthetic.hpp"

namespace seqal {

struct ExperimentConfig {
  std::string corpus;
  std::string synthetic;
  std::string test_corpus;
  std::vector<Strategy> strategies{Strategy::kRand, Strategy::kLc, Strategy::kNlc, Strategy::kMtp,
                                   Strategy::kLtp};
  std::size_t batch_size = 200;
  std::size_t iterations = 12;
  std::size_t seeds = 10;
  std::size_t initial_labeled = 99;
  std::size_t test_size = 1000;
  std::uint64_t base_seed = 0;
  HMode h_mode = HMode::kPosteriorMarginal;
  NlcMode nlc_mode = NlcMode::kGeometricMean;
  bool repair = false;
  LearnerOptions learner;

  StrategyConfig strategy_config(Strategy s, std::size_t seed_index) const {
    return {s, h_mode, nlc_mode, seed_for(seed_index)};
  }
  std::uint64_t seed_for(std::size_t seed_index) const { return derive_seed(base_seed, seed_index); }
};

// Relative paths are resolved against `base_dir`.
inline ExperimentConfig experiment_config_from(const KeyValueConfig& kv, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  auto path = [&](const std::string& key) {
    auto v = kv.get<std::string>(key, "");
    if (v.empty() || std::filesystem::path(v).is_absolute() || base_dir.empty()) return v;
    return (base_dir / v).lexically_normal().string();
  };
  c.corpus = path("corpus");
  c.synthetic = path("synthetic");
  c.test_corpus = path("test_corpus");
  if (c.corpus.empty() == c.synthetic.empty()) throw ConfigError("exactly one of 'corpus' or 'synthetic' is required");
  auto names = kv.get_list("strategies", {});
  if (!names.empty()) {
    c.strategies.clear();
    for (const auto& n : names) c.strategies.push_back(parse_strategy(n));
  }
  c.batch_size = kv.get<std::size_t>("batch_size", c.batch_size);
  c.iterations = kv.get<std::size_t>("iterations", c.iterations);
  c.seeds = kv.get<std::size_t>("seeds", c.seeds);
  c.initial_labeled = kv.get<std::size_t>("initial_labeled", c.initial_labeled);
  c.test_size = kv.get<std::size_t>("test_size", c.test_size);
  c.base_seed = kv.get<std::uint64_t>("base_seed", c.base_seed);
  c.h_mode = parse_h_mode(kv.get<std::string>("h_mode", to_string(c.h_mode)));
  c.nlc_mode = parse_nlc_mode(kv.get<std::string>("nlc_mode", to_string(c.nlc_mode)));
  c.repair = kv.get<bool>("repair", c.repair);
  auto& l = c.learner;
  l.features = FeatureTemplate::parse(kv.get<std::string>("features", "all"));
  l.l2_sigma = kv.get<double>("l2_sigma", l.l2_sigma);
  l.train.max_iterations = kv.get<std::size_t>("max_train_iterations", l.train.max_iterations);
  l.train.gradient_tolerance = kv.get<double>("train_gradient_tolerance", l.train.gradient_tolerance);
  l.train.min_relative_improvement = kv.get<double>("train_min_improvement", l.train.min_relative_improvement);
  l.bio_constraints = kv.get<bool>("bio_constraints", l.bio_constraints);
  l.warm_start = kv.get<bool>("warm_start", l.warm_start);
  kv.reject_unknown_keys();

  if (c.strategies.empty()) throw ConfigError("no strategies configured");
  if (c.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (c.seeds == 0) throw ConfigError("seeds must be >= 1");
  if (c.initial_labeled == 0) throw ConfigError("initial_labeled must be >= 1");
  if (!(l.l2_sigma > 0)) throw ConfigError("l2_sigma must be > 0");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from(KeyValueConfig::from_file(path), std::filesystem::path(path).parent_path());
}

struct SeedRun {
  std::size_t seed_index = 0;
  std::vector<IterationRecord> history;
};

struct StrategyLog {
  Strategy strategy = Strategy::kLtp;
  std::vector<std::string> schema;
  DistributionSnapshot overall;  // entity-type distribution of the whole corpus
  std::vector<SeedRun> runs;
};

struct ExperimentLog {
  std::vector<StrategyLog> strategies;
};

struct LoadedCorpora {
  Dataset corpus;
  std::optional<Dataset> test;
};

inline LoadedCorpora load_corpora(const ExperimentConfig& cfg) {
  LoadedCorpora out;
  ParseOptions po{cfg.repair};
  if (!cfg.corpus.empty()) {
    out.corpus = read_conll_file(cfg.corpus, po);
  } else {
    out.corpus = generate_synthetic(synthetic_config_from(KeyValueConfig::from_file(cfg.synthetic)));
  }
  if (!cfg.test_corpus.empty()) out.test = read_conll_file(cfg.test_corpus, po);
  return out;
}

// One seed's split: universe (labeled + pool), test, and the seed labels.
struct SeedSplit {
  Dataset universe;
  Dataset test;
  std::vector<int> labeled_ids;
  std::map<int, TagSequence> labels;
};

inline SeedSplit make_seed_split(const ExperimentConfig& cfg, const LoadedCorpora& data, std::size_t seed_index) {
  const std::size_t n_test = data.test ? 0 : cfg.test_size;
  auto parts = split(data.corpus, cfg.seed_for(seed_index), cfg.initial_labeled, n_test);
  SeedSplit s;
  s.test = data.test ? *data.test : std::move(parts.test);
  s.universe.schema = data.corpus.schema;
  std::merge(parts.labeled.sentences.begin(), parts.labeled.sentences.end(), parts.pool.sentences.begin(),
             parts.pool.sentences.end(), std::back_inserter(s.universe.sentences),
             [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });
  for (const auto& sent : parts.labeled.sentences) {
    s.labeled_ids.push_back(sent.id);
    s.labels.emplace(sent.id, sent.tags);
  }
  return s;
}

inline void check_experiment_fits(const ExperimentConfig& cfg, const LoadedCorpora& data) {
  const std::size_t n_test = data.test ? 0 : cfg.test_size;
  if (cfg.initial_labeled + n_test >= data.corpus.size()) {
    throw ConfigError(fmt::format("corpus has {} sentences; initial_labeled {} + test_size {} leaves an empty pool",
                                  data.corpus.size(), cfg.initial_labeled, n_test));
  }
  if (data.test && data.test->empty()) throw ConfigError("test corpus is empty");
  if (!data.test && n_test == 0) throw ConfigError("test_size must be >= 1 without a test corpus");
}

struct RunHooks {
  // Per-run snapshots go here (state_<STRATEGY>_seed<k>.json); existing
  // snapshots are resumed. Empty disables persistence.
  std::filesystem::path snapshot_dir;
  std::function<void(const std::string&)> progress;
};

inline std::filesystem::path snapshot_path(const std::filesystem::path& dir, Strategy s, std::size_t seed_index) {
  return dir / fmt::format("state_{}_seed{}.json", to_string(s), seed_index);
}

// Runs `cfg.iterations` iterations of one strategy on one seed split,
// resuming from `snapshot` when it exists.
inline std::vector<IterationRecord> run_single(const ExperimentConfig& cfg, const ActiveLearner& learner,
                                               const ALState& initial,
                                               Strategy strategy, std::size_t seed_index,
                                               const RunHooks& hooks) {
  const auto scfg = cfg.strategy_config(strategy, seed_index);
  GoldOracle oracle(learner.universe());
  std::filesystem::path snap;
  std::filesystem::path model_snap;
  ALState st;
  if (!hooks.snapshot_dir.empty()) {
    snap = snapshot_path(hooks.snapshot_dir, strategy, seed_index);
    model_snap = snap;
    model_snap.replace_extension(".model");
  }
  if (!snap.empty() && std::filesystem::exists(snap)) {
    st = state_from_json(read_json_file(snap), learner.fresh_model());
    if (cfg.learner.warm_start && std::filesystem::exists(model_snap)) {
      st.model = load_model(model_snap.string());
      st.model_current = true;
    }
    if (hooks.progress) hooks.progress(fmt::format("{} seed {}: resuming at iteration {}", to_string(strategy), seed_index, st.iteration));
  } else {
    st = initial;
  }
  while (static_cast<std::size_t>(st.iteration) < cfg.iterations && !st.pool.empty()) {
    st = learner.run_iteration(std::move(st), scfg, cfg.batch_size, oracle);
    if (!snap.empty()) {
      if (cfg.learner.warm_start) save_model(st.model, model_snap.string());
      write_json_atomic(snap, state_to_json(st));
    }
    if (hooks.progress) {
      const auto& r = st.history.back();
      hooks.progress(fmt::format("{} seed {} iter {}: |L|={} token-F1={:.4f} sent-acc={:.4f}", to_string(strategy),
                                 seed_index, r.iteration, r.labeled_size, r.metrics.token.f1,
                                 r.metrics.sentence_accuracy));
    }
  }
  return st.history;
}

inline ExperimentLog run_experiment(const ExperimentConfig& cfg, const LoadedCorpora& data, const RunHooks& hooks = {}) {
  check_experiment_fits(cfg, data);
  if (!hooks.snapshot_dir.empty()) std::filesystem::create_directories(hooks.snapshot_dir);
  ExperimentLog log;
  const auto overall = distribution_snapshot(data.corpus.sentences);
  for (auto s : cfg.strategies) log.strategies.push_back({s, data.corpus.schema, overall, {}});

  for (std::size_t k = 0; k < cfg.seeds; ++k) {
    auto sd = make_seed_split(cfg, data, k);
    ActiveLearner learner(sd.universe, sd.test, cfg.learner);
    std::optional<ALState> initial;
    for (auto& slog : log.strategies) {
      const bool resumable = !hooks.snapshot_dir.empty() &&
                             std::filesystem::exists(snapshot_path(hooks.snapshot_dir, slog.strategy, k));
      if (!initial && !resumable) initial = learner.start(sd.labeled_ids, sd.labels);
      ALState empty;
      slog.runs.push_back({k, run_single(cfg, learner, initial ? *initial : empty, slog.strategy, k, hooks)});
    }
  }
  return log;
}

}  // namespace seqal
