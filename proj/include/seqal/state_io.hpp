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

// JSON snapshots of active-learning state, written atomically
// (temp file + rename). Format "seqal-state", version 1:
//
//   { "format": "seqal-state", "version": 1,
//     "iteration": int, "initial_labeled": int, "batch_size": int,
//     "labeled": [ids], "pool": [ids],
//     "labels": { "<id>": ["B-X", "O", ...], ... },
//     "history": [ IterationRecord, ... ],
//     "extra": { ... caller-defined ... } }
//
// The model is not stored; it is retrained from the labeled set on load,
// which reproduces it exactly because training is deterministic.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "seqal/error.hpp"
#include "seqal/loop.hpp"

namespace seqal {

using nlohmann::json;

inline constexpr int kStateVersion = 1;

inline json tags_to_json(const TagSequence& tags) {
  json a = json::array();
  for (const auto& t : tags) a.push_back(t.str());
  return a;
}

inline TagSequence tags_from_json(const json& a) {
  TagSequence out;
  for (const auto& v : a) {
    auto t = Tag::parse(v.get<std::string>());
    if (!t) throw ParseError("bad tag '" + v.get<std::string>() + "' in JSON", 0);
    out.push_back(*t);
  }
  return out;
}

inline json prf_to_json(const PRF& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

inline PRF prf_from_json(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

inline json record_to_json(const IterationRecord& r) {
  json j{{"iteration", r.iteration},
         {"selected", r.selected},
         {"wall_seconds", r.wall_seconds},
         {"token", prf_to_json(r.metrics.token)},
         {"entity", prf_to_json(r.metrics.entity)},
         {"sentence_accuracy", r.metrics.sentence_accuracy},
         {"selected_distribution", r.selected_distribution},
         {"labeled_size", r.labeled_size},
         {"cumulative_tokens", r.cumulative_tokens},
         {"cumulative_entities", r.cumulative_entities}};
  j["offset"] = r.offset ? json(*r.offset) : json(nullptr);
  return j;
}

inline IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.selected = j.at("selected").get<std::vector<int>>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.metrics.token = prf_from_json(j.at("token"));
  r.metrics.entity = prf_from_json(j.at("entity"));
  r.metrics.sentence_accuracy = j.at("sentence_accuracy").get<double>();
  r.selected_distribution = j.at("selected_distribution").get<DistributionSnapshot>();
  r.labeled_size = j.at("labeled_size").get<std::size_t>();
  r.cumulative_tokens = j.at("cumulative_tokens").get<std::size_t>();
  r.cumulative_entities = j.at("cumulative_entities").get<std::size_t>();
  if (!j.at("offset").is_null()) r.offset = j.at("offset").get<double>();
  return r;
}

inline json state_to_json(const ALState& st, const json& extra = json::object()) {
  json labels = json::object();
  for (const auto& [id, tags] : st.labels) labels[std::to_string(id)] = tags_to_json(tags);
  json history = json::array();
  for (const auto& r : st.history) history.push_back(record_to_json(r));
  return {{"format", "seqal-state"},
          {"version", kStateVersion},
          {"iteration", st.iteration},
          {"initial_labeled", st.initial_labeled},
          {"batch_size", st.batch_size},
          {"labeled", st.labeled},
          {"pool", st.pool},
          {"labels", labels},
          {"history", history},
          {"extra", extra}};
}

// Restores everything but the model; model_current is false.
inline ALState state_from_json(const json& j, CrfModel fresh_model) {
  if (j.value("format", "") != "seqal-state" || j.value("version", 0) != kStateVersion) {
    throw ParseError("not a seqal-state version " + std::to_string(kStateVersion) + " snapshot", 0);
  }
  ALState st;
  st.iteration = j.at("iteration").get<int>();
  st.initial_labeled = j.at("initial_labeled").get<std::size_t>();
  st.batch_size = j.at("batch_size").get<std::size_t>();
  st.labeled = j.at("labeled").get<std::vector<int>>();
  st.pool = j.at("pool").get<std::vector<int>>();
  for (const auto& [key, tags] : j.at("labels").items()) st.labels.emplace(std::stoi(key), tags_from_json(tags));
  for (const auto& r : j.at("history")) st.history.push_back(record_from_json(r));
  st.model = std::move(fresh_model);
  st.model_current = false;
  return st;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(1) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

}  // namespace seqal
