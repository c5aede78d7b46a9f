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

// "key = value" configuration files, '#' or ';' comments. Parsing is done by
// Boost.PropertyTree's INI reader; sections are not used.

#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "seqal/error.hpp"

namespace seqal {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path) {
    KeyValueConfig c;
    try {
      boost::property_tree::ini_parser::read_ini(path, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    c.source_ = path;
    return c;
  }

  static KeyValueConfig from_string(const std::string& text) {
    KeyValueConfig c;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    c.source_ = "<string>";
    return c;
  }

  bool has(const std::string& key) const { return tree_.find(key) != tree_.not_found(); }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    used_.insert(key);
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return fallback;
    return convert<T>(key, *v);
  }

  template <typename T>
  T require(const std::string& key) const {
    used_.insert(key);
    auto v = tree_.get_optional<std::string>(key);
    if (!v) throw ConfigError(source_ + ": missing key '" + key + "'");
    return convert<T>(key, *v);
  }

  // Comma-separated list with surrounding whitespace trimmed.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const {
    used_.insert(key);
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto b = item.find_first_not_of(" \t");
      auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }

  // Throws on keys that no getter asked for (typos in config files).
  void reject_unknown_keys() const {
    for (const auto& kv : tree_) {
      if (!used_.count(kv.first)) {
        throw ConfigError(source_ + ": unknown key '" + kv.first + "'");
      }
    }
  }

  void set(const std::string& key, const std::string& value) { tree_.put(key, value); }

 private:
  template <typename T>
  T convert(const std::string& key, const std::string& raw) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes") return true;
      if (raw == "false" || raw == "0" || raw == "no") return false;
      throw ConfigError(source_ + ": key '" + key + "' expects a boolean, got '" + raw + "'");
    } else {
      std::istringstream in(raw);
      T value{};
      in >> value;
      if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError(source_ + ": key '" + key + "' has bad value '" + raw + "'");
      }
      return value;
    }
  }

  boost::property_tree::ptree tree_;
  std::string source_ = "<empty>";
  mutable std::set<std::string> used_;
};

}  // namespace seqal
