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

// Text formats for CRF models and externally computed emission matrices.
//
// Model file (version 1):
//   seqal-crf 1
//   labels <L>
//   <one label per line>
//   features <F>
//   l2_sigma <sigma>
//   bio_constraints <0|1>
//   transitions
//   <L lines of L values>
//   weights <R>
//   <R lines "<feature id> <L values>", all-zero rows omitted>
//
// Emission-matrix file: one block per sentence,
//   sentence <id> <N> <L>
//   <N lines of L whitespace-separated values>
// blocks separated by blank lines. Values use shortest round-trip formatting.

#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "seqal/crf.hpp"
#include "seqal/error.hpp"

namespace seqal {

inline constexpr std::string_view kModelMagic = "seqal-crf";
inline constexpr int kModelVersion = 1;

namespace detail {

inline void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j) out << ' ';
    out << fmt::format("{}", row[j]);
  }
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(std::string("unexpected end of input, expected ") + what, lineno_ + 1);
    ++lineno_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // "<key> <value>" line.
  std::string keyed(const std::string& key) {
    auto line = next(key.c_str());
    if (line.rfind(key + " ", 0) != 0) throw ParseError("expected '" + key + "'", lineno_);
    return line.substr(key.size() + 1);
  }

  std::vector<double> numbers(std::size_t expected, const char* what) {
    std::istringstream ss(next(what));
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ParseError(std::string("bad number in ") + what, lineno_);
      }
    }
    if (out.size() != expected) {
      throw ParseError(std::string(what) + ": expected " + std::to_string(expected) + " values, got " +
                           std::to_string(out.size()),
                       lineno_);
    }
    return out;
  }

  std::size_t line() const { return lineno_; }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

inline std::size_t to_count(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ParseError("expected a count, got '" + s + "'", line);
  }
}

}  // namespace detail

inline void write_model(std::ostream& out, const CrfModel& m) {
  const auto L = m.n_labels();
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "labels " << L << '\n';
  for (const auto& t : m.labels) out << t.str() << '\n';
  out << "features " << m.n_features() << '\n';
  out << "l2_sigma " << fmt::format("{}", m.l2_sigma) << '\n';
  out << "bio_constraints " << (m.bio_constraints ? 1 : 0) << '\n';
  out << "transitions\n";
  for (std::size_t a = 0; a < L; ++a) detail::write_row(out, m.transitions.row(a));
  std::vector<std::size_t> rows;
  for (std::size_t f = 0; f < m.n_features(); ++f) {
    auto r = m.weights.row(f);
    if (std::any_of(r.begin(), r.end(), [](double v) { return v != 0.0; })) rows.push_back(f);
  }
  out << "weights " << rows.size() << '\n';
  for (auto f : rows) {
    out << f << ' ';
    detail::write_row(out, m.weights.row(f));
  }
}

inline CrfModel read_model(std::istream& in) {
  detail::LineReader r(in);
  const auto header = r.next("header");
  if (header != fmt::format("{} {}", kModelMagic, kModelVersion)) {
    throw ParseError("not a seqal-crf version " + std::to_string(kModelVersion) + " model", 1);
  }
  const auto L = detail::to_count(r.keyed("labels"), r.line());
  std::vector<Tag> labels;
  for (std::size_t i = 0; i < L; ++i) {
    auto t = Tag::parse(r.next("label"));
    if (!t) throw ParseError("bad label", r.line());
    labels.push_back(*t);
  }
  const auto F = detail::to_count(r.keyed("features"), r.line());
  double sigma = 0;
  try {
    sigma = std::stod(r.keyed("l2_sigma"));
  } catch (const std::invalid_argument&) {
    throw ParseError("bad l2_sigma", r.line());
  }
  if (!(sigma > 0)) throw ParseError("l2_sigma must be positive", r.line());
  CrfModel m = CrfModel::zeros(std::move(labels), F, sigma);
  m.bio_constraints = r.keyed("bio_constraints") == "1";
  if (r.next("transitions") != "transitions") throw ParseError("expected 'transitions'", r.line());
  for (std::size_t a = 0; a < L; ++a) {
    auto row = r.numbers(L, "transition row");
    std::copy(row.begin(), row.end(), m.transitions.row(a).begin());
  }
  const auto R = detail::to_count(r.keyed("weights"), r.line());
  for (std::size_t k = 0; k < R; ++k) {
    auto row = r.numbers(L + 1, "weight row");
    const auto f = static_cast<std::size_t>(row[0]);
    if (row[0] < 0 || f >= F || static_cast<double>(f) != row[0]) throw ParseError("bad feature id", r.line());
    std::copy(row.begin() + 1, row.end(), m.weights.row(f).begin());
  }
  return m;
}

inline void save_model(const CrfModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_model(out, m);
}

inline CrfModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_model(in);
}

using EmissionTable = std::map<int, Matrix>;

inline void write_emissions(std::ostream& out, const EmissionTable& table) {
  bool first = true;
  for (const auto& [id, mat] : table) {
    if (!first) out << '\n';
    first = false;
    out << "sentence " << id << ' ' << mat.rows() << ' ' << mat.cols() << '\n';
    for (std::size_t i = 0; i < mat.rows(); ++i) detail::write_row(out, mat.row(i));
  }
}

inline EmissionTable read_emissions(std::istream& in) {
  EmissionTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream head(line);
    std::string kw;
    long long id = 0;
    std::size_t rows = 0, cols = 0;
    if (!(head >> kw >> id >> rows >> cols) || kw != "sentence") {
      throw ParseError("expected 'sentence <id> <N> <L>'", lineno);
    }
    Matrix mat(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) throw ParseError("sentence " + std::to_string(id) + ": truncated block", lineno);
      ++lineno;
      std::istringstream ss(line);
      std::string tok;
      std::size_t j = 0;
      while (ss >> tok) {
        if (j >= cols) throw ShapeError("sentence " + std::to_string(id) + ": row " + std::to_string(i) + " has too many values");
        try {
          mat(i, j++) = std::stod(tok);
        } catch (const std::exception&) {
          throw ParseError("sentence " + std::to_string(id) + ": bad number '" + tok + "'", lineno);
        }
      }
      if (j != cols) throw ShapeError("sentence " + std::to_string(id) + ": row " + std::to_string(i) + " has " + std::to_string(j) + " values, expected " + std::to_string(cols));
    }
    if (!table.emplace(static_cast<int>(id), std::move(mat)).second) {
      throw ParseError("duplicate sentence " + std::to_string(id), lineno);
    }
  }
  return table;
}

// Reads emission blocks and checks them against the model's label count and
// the sentence lengths in `d`. Every sentence of `d` must have a block.
inline EmissionTable load_emission_matrix(std::istream& in, const CrfModel& m, const Dataset& d) {
  auto table = read_emissions(in);
  for (const auto& s : d.sentences) {
    auto it = table.find(s.id);
    if (it == table.end()) throw ShapeError("sentence " + std::to_string(s.id) + ": no emission block");
    if (it->second.cols() != m.n_labels()) {
      throw ShapeError("sentence " + std::to_string(s.id) + ": " + std::to_string(it->second.cols()) +
                       " label columns, model has " + std::to_string(m.n_labels()));
    }
    if (it->second.rows() != s.size()) {
      throw ShapeError("sentence " + std::to_string(s.id) + ": " + std::to_string(it->second.rows()) +
                       " rows, sentence has " + std::to_string(s.size()) + " tokens");
    }
  }
  return table;
}

inline EmissionTable load_emission_matrix(const std::string& path, const CrfModel& m, const Dataset& d) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_emission_matrix(in, m, d);
}

}  // namespace seqal
