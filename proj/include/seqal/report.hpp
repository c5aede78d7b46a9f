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

// Experiment logs and learning-curve reports.
//
// log_<STRATEGY>.csv: one row per seed x iteration,
//   strategy,seed,iteration,labeled,selected_count,token_precision,
//   token_recall,token_f1,entity_precision,entity_recall,entity_f1,
//   sentence_accuracy,cumulative_tokens,cumulative_entities,offset,
//   selected:<TYPE>...,overall:<TYPE>...,selected_ids
// `offset` is empty before iteration 2; selected_ids are space-separated in
// selection order. Reals use shortest round-trip formatting.
//
// curve_<STRATEGY>.csv: one row per iteration with <metric>_mean and
// <metric>_std (population std over seeds) for labeled, token_f1,
// entity_f1, sentence_accuracy, cumulative_tokens, cumulative_entities,
// offset and deviation:<TYPE> (selected minus overall proportion).
// summary_<STRATEGY>.json mirrors it. comparison.csv stacks the headline
// columns of every strategy.

#pragma once

#include <cmath>
#include <filesystem>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seqal/error.hpp"
#include "seqal/experiment.hpp"
#include "seqal/state_io.hpp"

namespace seqal {

namespace detail {

inline std::string fmt_real(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_real(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in log", 0);
  }
}

inline constexpr const char* kLogFixedColumns[] = {
    "strategy",        "seed",          "iteration",        "labeled",           "selected_count",
    "token_precision", "token_recall",  "token_f1",         "entity_precision",  "entity_recall",
    "entity_f1",       "sentence_accuracy", "cumulative_tokens", "cumulative_entities", "offset"};

}  // namespace detail

inline void write_log_csv(std::ostream& out, const StrategyLog& log) {
  std::string header;
  for (const char* c : detail::kLogFixedColumns) header += std::string(header.empty() ? "" : ",") + c;
  for (const auto& t : log.schema) header += ",selected:" + t;
  for (const auto& t : log.schema) header += ",overall:" + t;
  header += ",selected_ids";
  out << header << '\n';
  auto share = [](const DistributionSnapshot& d, const std::string& t) {
    auto it = d.find(t);
    return it == d.end() ? 0.0 : it->second;
  };
  for (const auto& run : log.runs) {
    for (const auto& r : run.history) {
      const auto& m = r.metrics;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", to_string(log.strategy), run.seed_index,
                         r.iteration, r.labeled_size, r.selected.size(), detail::fmt_real(m.token.precision),
                         detail::fmt_real(m.token.recall), detail::fmt_real(m.token.f1),
                         detail::fmt_real(m.entity.precision), detail::fmt_real(m.entity.recall),
                         detail::fmt_real(m.entity.f1), detail::fmt_real(m.sentence_accuracy), r.cumulative_tokens,
                         r.cumulative_entities, r.offset ? detail::fmt_real(*r.offset) : std::string());
      for (const auto& t : log.schema) out << ',' << detail::fmt_real(share(r.selected_distribution, t));
      for (const auto& t : log.schema) out << ',' << detail::fmt_real(share(log.overall, t));
      out << ',';
      for (std::size_t k = 0; k < r.selected.size(); ++k) out << (k ? " " : "") << r.selected[k];
      out << '\n';
    }
  }
}

inline std::string log_csv_string(const StrategyLog& log) {
  std::ostringstream out;
  write_log_csv(out, log);
  return out.str();
}

// Inverse of write_log_csv (wall time is not logged and reads as 0).
inline StrategyLog read_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty log", 1);
  const auto header = detail::split_csv_line(line);
  const std::size_t nfixed = std::size(detail::kLogFixedColumns);
  if (header.size() < nfixed + 1 || header.back() != "selected_ids") throw ParseError("unexpected log header", 1);
  for (std::size_t i = 0; i < nfixed; ++i) {
    if (header[i] != detail::kLogFixedColumns[i]) throw ParseError("unexpected log column " + header[i], 1);
  }
  const std::size_t ntypes = (header.size() - nfixed - 1) / 2;
  StrategyLog log;
  for (std::size_t t = 0; t < ntypes; ++t) log.schema.push_back(header[nfixed + t].substr(std::string("selected:").size()));

  std::size_t lineno = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != header.size()) throw ParseError("wrong number of columns", lineno);
    if (first) {
      log.strategy = parse_strategy(c[0]);
      for (std::size_t t = 0; t < ntypes; ++t) {
        double v = detail::parse_real(c[nfixed + ntypes + t]);
        if (v > 0) log.overall[log.schema[t]] = v;
      }
      first = false;
    }
    const auto seed = static_cast<std::size_t>(std::stoull(c[1]));
    if (log.runs.empty() || log.runs.back().seed_index != seed) log.runs.push_back({seed, {}});
    IterationRecord r;
    r.iteration = std::stoi(c[2]);
    r.labeled_size = std::stoull(c[3]);
    r.metrics.token = {detail::parse_real(c[5]), detail::parse_real(c[6]), detail::parse_real(c[7])};
    r.metrics.entity = {detail::parse_real(c[8]), detail::parse_real(c[9]), detail::parse_real(c[10])};
    r.metrics.sentence_accuracy = detail::parse_real(c[11]);
    r.cumulative_tokens = std::stoull(c[12]);
    r.cumulative_entities = std::stoull(c[13]);
    if (!c[14].empty()) r.offset = detail::parse_real(c[14]);
    for (std::size_t t = 0; t < ntypes; ++t) {
      double v = detail::parse_real(c[nfixed + t]);
      if (v > 0) r.selected_distribution[log.schema[t]] = v;
    }
    std::istringstream ids(c.back());
    for (int id; ids >> id;) r.selected.push_back(id);
    if (r.selected.size() != std::stoull(c[4])) throw ParseError("selected_count does not match ids", lineno);
    log.runs.back().history.push_back(std::move(r));
  }
  return log;
}

// Per-record metric values; NaN where undefined.
inline std::vector<std::string> curve_metric_names(const StrategyLog& log) {
  std::vector<std::string> names{"labeled",          "token_f1",          "entity_f1", "sentence_accuracy",
                                 "cumulative_tokens", "cumulative_entities", "offset"};
  for (const auto& t : log.schema) names.push_back("deviation:" + t);
  return names;
}

inline std::vector<double> curve_metric_values(const StrategyLog& log, const IterationRecord& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v{static_cast<double>(r.labeled_size),
                        r.metrics.token.f1,
                        r.metrics.entity.f1,
                        r.metrics.sentence_accuracy,
                        static_cast<double>(r.cumulative_tokens),
                        static_cast<double>(r.cumulative_entities),
                        r.offset ? *r.offset : nan};
  for (const auto& t : log.schema) {
    if (r.iteration == 0) {
      v.push_back(nan);
      continue;
    }
    auto sel = r.selected_distribution.find(t);
    auto all = log.overall.find(t);
    v.push_back((sel == r.selected_distribution.end() ? 0.0 : sel->second) -
                (all == log.overall.end() ? 0.0 : all->second));
  }
  return v;
}

struct CurveRow {
  int iteration = 0;
  std::size_t n_seeds = 0;
  std::vector<double> mean;    // NaN when no seed defines the metric
  std::vector<double> stddev;
};

struct LearningCurve {
  Strategy strategy = Strategy::kLtp;
  std::vector<std::string> metrics;
  std::vector<CurveRow> rows;
};

// Seed mean and population std of every metric at every iteration.
// Iterations are aligned by index; sums run in seed order.
inline LearningCurve learning_curve_report(const StrategyLog& log) {
  if (log.runs.empty()) throw Error("learning_curve_report: empty log");
  LearningCurve curve{log.strategy, curve_metric_names(log), {}};
  std::size_t n_iter = 0;
  for (const auto& run : log.runs) n_iter = std::max(n_iter, run.history.size());
  const std::size_t nm = curve.metrics.size();
  for (std::size_t i = 0; i < n_iter; ++i) {
    CurveRow row;
    std::vector<std::vector<double>> values(nm);
    for (const auto& run : log.runs) {
      if (i >= run.history.size()) continue;
      row.iteration = run.history[i].iteration;
      ++row.n_seeds;
      auto v = curve_metric_values(log, run.history[i]);
      for (std::size_t m = 0; m < nm; ++m) {
        if (!std::isnan(v[m])) values[m].push_back(v[m]);
      }
    }
    for (std::size_t m = 0; m < nm; ++m) {
      const auto& xs = values[m];
      if (xs.empty()) {
        row.mean.push_back(std::numeric_limits<double>::quiet_NaN());
        row.stddev.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double sum = 0;
      for (double x : xs) sum += x;
      const double mean = sum / static_cast<double>(xs.size());
      double ss = 0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      row.mean.push_back(mean);
      row.stddev.push_back(std::sqrt(ss / static_cast<double>(xs.size())));
    }
    curve.rows.push_back(std::move(row));
  }
  return curve;
}

inline void write_curve_csv(std::ostream& out, const LearningCurve& curve) {
  out << "strategy,iteration,n_seeds";
  for (const auto& m : curve.metrics) out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  for (const auto& r : curve.rows) {
    out << to_string(curve.strategy) << ',' << r.iteration << ',' << r.n_seeds;
    for (std::size_t m = 0; m < curve.metrics.size(); ++m) {
      out << ',' << detail::fmt_real(r.mean[m]) << ',' << detail::fmt_real(r.stddev[m]);
    }
    out << '\n';
  }
}

inline nlohmann::json curve_to_json(const LearningCurve& curve) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : curve.rows) {
    nlohmann::json row{{"iteration", r.iteration}, {"n_seeds", r.n_seeds}};
    for (std::size_t m = 0; m < curve.metrics.size(); ++m) {
      auto cell = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
      row[curve.metrics[m]] = {{"mean", cell(r.mean[m])}, {"std", cell(r.stddev[m])}};
    }
    rows.push_back(std::move(row));
  }
  return {{"strategy", to_string(curve.strategy)}, {"metrics", curve.metrics}, {"curve", rows}};
}

// Headline columns for several strategies, one row per strategy x iteration.
inline void write_comparison_csv(std::ostream& out, const std::vector<LearningCurve>& curves) {
  static const std::vector<std::string> kColumns{"labeled",           "token_f1",          "entity_f1",
                                                 "sentence_accuracy", "cumulative_tokens", "cumulative_entities",
                                                 "offset"};
  out << "strategy,iteration,n_seeds";
  for (const auto& c : kColumns) out << ',' << c << "_mean," << c << "_std";
  out << '\n';
  for (const auto& curve : curves) {
    for (const auto& r : curve.rows) {
      out << to_string(curve.strategy) << ',' << r.iteration << ',' << r.n_seeds;
      for (const auto& c : kColumns) {
        auto it = std::find(curve.metrics.begin(), curve.metrics.end(), c);
        const auto m = static_cast<std::size_t>(it - curve.metrics.begin());
        out << ',' << detail::fmt_real(r.mean[m]) << ',' << detail::fmt_real(r.stddev[m]);
      }
      out << '\n';
    }
  }
}

// Writes log/curve/summary files per strategy plus comparison.csv.
inline void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentLog& log) {
  std::filesystem::create_directories(dir);
  std::vector<LearningCurve> curves;
  for (const auto& slog : log.strategies) {
    const auto name = to_string(slog.strategy);
    write_text_atomic(dir / ("log_" + name + ".csv"), log_csv_string(slog));
    auto curve = learning_curve_report(slog);
    std::ostringstream cs;
    write_curve_csv(cs, curve);
    write_text_atomic(dir / ("curve_" + name + ".csv"), cs.str());
    write_text_atomic(dir / ("summary_" + name + ".json"), curve_to_json(curve).dump(1) + "\n");
    curves.push_back(std::move(curve));
  }
  std::ostringstream comp;
  write_comparison_csv(comp, curves);
  write_text_atomic(dir / "comparison.csv", comp.str());
}

}  // namespace seqal
