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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqal {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Invalid BIO transition. sentence_id() is -1 for anonymous tag sequences.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, int sentence_id, std::size_t position)
      : Error(what), sentence_id_(sentence_id), position_(position) {}
  int sentence_id() const { return sentence_id_; }
  std::size_t position() const { return position_; }

 private:
  int sentence_id_;
  std::size_t position_;
};

// Dimension mismatch between a model and its inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad configuration value or missing key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Objective became non-finite during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace seqal
