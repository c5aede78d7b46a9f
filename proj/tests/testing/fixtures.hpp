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

// Small corpora and fast learner settings shared by the loop, report and
// service tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "seqal/experiment.hpp"
#include "seqal/synthetic.hpp"

namespace seqal::testing {

inline SyntheticConfig small_synthetic(std::size_t n, std::uint64_t seed = 3) {
  SyntheticConfig cfg;
  cfg.n_sentences = n;
  cfg.types = {{"PER", 4}, {"LOC", 2}, {"ORG", 1}};
  cfg.max_length = 10;
  cfg.filler_vocab = 150;
  cfg.lexicon_size = 20;
  cfg.seed = seed;
  return cfg;
}

inline LearnerOptions fast_learner() {
  LearnerOptions o;
  o.features = FeatureTemplate::parse("identity,lowercase,affixes,window");
  o.train.max_iterations = 40;
  o.train.gradient_tolerance = 1e-4;
  o.train.min_relative_improvement = 1e-5;
  return o;
}

inline ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.synthetic = "<inline>";
  c.batch_size = 5;
  c.iterations = 3;
  c.seeds = 2;
  c.initial_labeled = 8;
  c.test_size = 30;
  c.base_seed = 11;
  c.learner = fast_learner();
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("seqal_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace seqal::testing
