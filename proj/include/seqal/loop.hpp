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

// Pool-based active learning: train on the labeled set, score the pool,
// send the top-b sentences to an oracle, move them to the labeled set,
// retrain, evaluate on the held-out test split. Repeat.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqal/corpus.hpp"
#include "seqal/crf.hpp"
#include "seqal/crf_train.hpp"
#include "seqal/error.hpp"
#include "seqal/features.hpp"
#include "seqal/metrics.hpp"
#include "seqal/parallel.hpp"
#include "seqal/random.hpp"
#include "seqal/strategies.hpp"

namespace seqal {

struct EvaluationMetrics {
  PRF token;
  PRF entity;
  double sentence_accuracy = 0;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<int> selected;  // in selection order
  double wall_seconds = 0;
  EvaluationMetrics metrics;  // test split, model trained after this iteration's labels
  DistributionSnapshot selected_distribution;
  std::size_t labeled_size = 0;
  std::size_t cumulative_tokens = 0;    // over all selected sentences so far
  std::size_t cumulative_entities = 0;
  std::optional<double> offset;  // vs. previous iteration, from iteration 2 on
};

struct ALState {
  std::vector<int> labeled;  // sorted
  std::vector<int> pool;     // sorted
  std::map<int, TagSequence> labels;
  int iteration = 0;
  std::size_t initial_labeled = 0;
  std::size_t batch_size = 0;  // 0 until the first iteration runs
  CrfModel model;
  bool model_current = false;  // model was trained on exactly `labeled`
  std::vector<IterationRecord> history;
};

// Raised when an oracle answer does not fit the query.
class OracleError : public Error {
 public:
  using Error::Error;
};

// Thrown by oracles whose annotators went away (e.g. service shutdown).
class SessionClosed : public Error {
 public:
  using Error::Error;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  // Tag sequences aligned with `ids`.
  virtual std::vector<TagSequence> label(std::span<const int> ids) = 0;
};

// Answers with the stored gold tags.
class GoldOracle : public Oracle {
 public:
  explicit GoldOracle(const Dataset& d) {
    for (const auto& s : d.sentences) tags_.emplace(s.id, s.tags);
  }

  std::vector<TagSequence> label(std::span<const int> ids) override {
    std::vector<TagSequence> out;
    out.reserve(ids.size());
    for (int id : ids) {
      auto it = tags_.find(id);
      if (it == tags_.end()) throw OracleError("gold oracle: unknown sentence id " + std::to_string(id));
      out.push_back(it->second);
    }
    return out;
  }

 private:
  std::unordered_map<int, TagSequence> tags_;
};

inline GoldOracle gold_oracle(const Dataset& d) { return GoldOracle(d); }

struct LearnerOptions {
  FeatureTemplate features;
  TrainOptions train{.max_iterations = 100, .gradient_tolerance = 1e-5, .min_relative_improvement = 1e-6};
  double l2_sigma = 1.0;
  bool bio_constraints = false;
  // Start each retrain from the previous model instead of zeros.
  bool warm_start = false;
  std::size_t jobs = 1;
};

// Holds the featurized corpus for one split and runs iterations over
// ALState values. The universe is labeled + pool; its gold tags are never
// read here (labels come from the state / oracle).
class ActiveLearner {
 public:
  ActiveLearner(Dataset universe, Dataset test, LearnerOptions opts)
      : universe_(std::move(universe)), test_(std::move(test)), opts_(std::move(opts)) {
    if (universe_.empty()) throw Error("active learner: empty universe");
    std::vector<std::string> schema = universe_.schema;
    for (const auto& t : test_.schema) {
      if (std::find(schema.begin(), schema.end(), t) == schema.end()) schema.push_back(t);
    }
    labels_ = labels_for_schema(schema);
    index_ = build_feature_index(universe_, opts_.features);
    for (std::size_t i = 0; i < universe_.size(); ++i) {
      if (!position_.emplace(universe_.sentences[i].id, i).second) throw Error("active learner: duplicate id");
    }
    featurized_ = featurize_dataset(universe_, index_);
    test_featurized_ = featurize_dataset(test_, index_);
    for (const auto& s : test_.sentences) test_gold_.push_back(s.tags);
  }

  const Dataset& universe() const { return universe_; }
  const Dataset& test() const { return test_; }
  const FeatureIndex& feature_index() const { return index_; }
  const std::vector<Tag>& labels() const { return labels_; }
  const LearnerOptions& options() const { return opts_; }

  const LabeledSentence& sentence(int id) const { return universe_.sentences[position(id)]; }

  CrfModel fresh_model() const {
    CrfModel m = CrfModel::zeros(labels_, index_.size(), opts_.l2_sigma);
    m.bio_constraints = opts_.bio_constraints;
    return m;
  }

  // Initial state: `labeled_ids` with their labels, everything else in the
  // pool; trains the first model and records iteration 0.
  ALState start(std::span<const int> labeled_ids, const std::map<int, TagSequence>& labels) const {
    ALState st;
    st.labeled.assign(labeled_ids.begin(), labeled_ids.end());
    std::sort(st.labeled.begin(), st.labeled.end());
    for (int id : st.labeled) {
      auto it = labels.find(id);
      if (it == labels.end()) throw Error("start: no labels for sentence " + std::to_string(id));
      check_labels(id, it->second);
      st.labels.emplace(id, it->second);
    }
    for (const auto& s : universe_.sentences) {
      if (!std::binary_search(st.labeled.begin(), st.labeled.end(), s.id)) st.pool.push_back(s.id);
    }
    std::sort(st.pool.begin(), st.pool.end());
    if (st.labeled.empty()) throw Error("start: empty labeled set");
    st.initial_labeled = st.labeled.size();
    st.model = fresh_model();

    const auto t0 = std::chrono::steady_clock::now();
    retrain(st);
    IterationRecord rec;
    rec.iteration = 0;
    rec.labeled_size = st.labeled.size();
    rec.metrics = evaluate(st.model);
    rec.wall_seconds = seconds_since(t0);
    st.history.push_back(std::move(rec));
    return st;
  }

  // Trains state.model on the current labeled set if it is stale.
  void ensure_trained(ALState& st) const {
    if (!st.model_current) retrain(st);
  }

  std::vector<DecodeResult> decode_all(const CrfModel& m, std::span<const int> ids) const {
    std::vector<DecodeResult> out(ids.size());
    parallel_for(ids.size(), opts_.jobs, [&](std::size_t k) {
      out[k] = decode(m, featurized_[position(ids[k])]);
    });
    return out;
  }

  DecodeResult decode_sentence(const CrfModel& m, int id) const { return decode(m, featurized_[position(id)]); }

  EvaluationMetrics evaluate(const CrfModel& m) const {
    std::vector<TagSequence> pred(test_featurized_.size());
    parallel_for(pred.size(), opts_.jobs, [&](std::size_t k) {
      pred[k] = m.decode_labels(viterbi(build_lattice(m, test_featurized_[k])).path);
    });
    EvaluationMetrics em;
    em.token = token_f1(pred, test_gold_);
    em.entity = entity_f1(pred, test_gold_);
    em.sentence_accuracy = sentence_accuracy(pred, test_gold_);
    return em;
  }

  // Ids the strategy would send to the oracle next, in selection order.
  std::vector<int> select(const ALState& st, const StrategyConfig& cfg, std::size_t b) const {
    if (st.pool.empty()) throw Error("run_iteration: pool is empty");
    if (!st.model_current) throw Error("select: model is stale");
    StrategyConfig round = cfg;
    round.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(st.iteration));
    std::vector<DecodeResult> decoded;
    if (cfg.needs_decoding()) decoded = decode_all(st.model, st.pool);
    const auto scores = score_pool(round, st.pool, decoded);
    return select_batch(scores, b);
  }

  // One iteration. The input state is left untouched; on oracle failure the
  // exception propagates and nothing changes.
  ALState run_iteration(ALState st, const StrategyConfig& cfg, std::size_t b, Oracle& oracle) const {
    const auto t0 = std::chrono::steady_clock::now();
    ensure_trained(st);
    const auto chosen = select(st, cfg, b);

    auto answers = oracle.label(chosen);
    if (answers.size() != chosen.size()) {
      throw OracleError("oracle returned " + std::to_string(answers.size()) + " label sequences for " +
                        std::to_string(chosen.size()) + " sentences");
    }
    for (std::size_t k = 0; k < chosen.size(); ++k) check_labels(chosen[k], answers[k]);

    if (st.batch_size == 0) st.batch_size = b;
    IterationRecord rec;
    rec.iteration = st.iteration + 1;
    rec.selected = chosen;
    std::vector<LabeledSentence> selected;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      const int id = chosen[k];
      st.labels[id] = answers[k];
      selected.push_back({id, sentence(id).tokens, answers[k]});
      st.labeled.insert(std::lower_bound(st.labeled.begin(), st.labeled.end(), id), id);
      st.pool.erase(std::lower_bound(st.pool.begin(), st.pool.end(), id));
    }
    ++st.iteration;
    st.model_current = false;
    retrain(st);

    const IterationRecord* prev = st.history.empty() ? nullptr : &st.history.back();
    rec.selected_distribution = distribution_snapshot(selected);
    rec.cumulative_tokens = prev ? prev->cumulative_tokens : 0;
    rec.cumulative_entities = prev ? prev->cumulative_entities : 0;
    for (const auto& s : selected) {
      rec.cumulative_tokens += s.size();
      for (const auto& t : s.tags) rec.cumulative_entities += t.is_begin() ? 1 : 0;
    }
    if (prev && prev->iteration >= 1) rec.offset = sampling_offset(prev->selected_distribution, rec.selected_distribution);
    rec.labeled_size = st.labeled.size();
    rec.metrics = evaluate(st.model);
    rec.wall_seconds = seconds_since(t0);
    st.history.push_back(std::move(rec));
    check_bookkeeping(st);
    return st;
  }

  // Disjointness, coverage and |L_i| = |L_1| + (i-1) B while the pool lasts.
  void check_bookkeeping(const ALState& st) const {
    if (st.labeled.size() + st.pool.size() != universe_.size()) {
      throw std::logic_error("bookkeeping: labeled + pool != universe");
    }
    std::vector<int> both;
    std::set_intersection(st.labeled.begin(), st.labeled.end(), st.pool.begin(), st.pool.end(),
                          std::back_inserter(both));
    if (!both.empty()) throw std::logic_error("bookkeeping: labeled and pool overlap");
    const std::size_t expected =
        std::min(st.initial_labeled + static_cast<std::size_t>(st.iteration) * st.batch_size, universe_.size());
    if (st.labeled.size() != expected) throw std::logic_error("bookkeeping: labeled size does not match");
  }

  void retrain(ALState& st) const {
    std::vector<TrainingExample> batch;
    batch.reserve(st.labeled.size());
    for (int id : st.labeled) batch.push_back({featurized_[position(id)], st.model.encode(st.labels.at(id))});
    const CrfModel& init = opts_.warm_start && st.model.n_features() == index_.size() ? st.model : fresh_model();
    st.model = train(init, batch, opts_.train);
    st.model_current = true;
  }

 private:
  std::size_t position(int id) const {
    auto it = position_.find(id);
    if (it == position_.end()) throw Error("unknown sentence id " + std::to_string(id));
    return it->second;
  }

  void check_labels(int id, const TagSequence& tags) const {
    const auto& s = sentence(id);
    if (tags.size() != s.size()) {
      throw OracleError("sentence " + std::to_string(id) + ": " + std::to_string(tags.size()) +
                        " tags for " + std::to_string(s.size()) + " tokens");
    }
    if (auto pos = first_bio_violation(tags)) {
      throw OracleError("sentence " + std::to_string(id) + ": " + bio_violation_message(tags, *pos));
    }
    for (const auto& t : tags) {
      if (std::find(labels_.begin(), labels_.end(), t) == labels_.end()) {
        throw OracleError("sentence " + std::to_string(id) + ": unknown label " + t.str());
      }
    }
  }

  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  Dataset universe_;
  Dataset test_;
  LearnerOptions opts_;
  std::vector<Tag> labels_;
  FeatureIndex index_;
  std::unordered_map<int, std::size_t> position_;
  std::vector<FeaturizedSentence> featurized_;
  std::vector<FeaturizedSentence> test_featurized_;
  std::vector<TagSequence> test_gold_;
};

}  // namespace seqal
