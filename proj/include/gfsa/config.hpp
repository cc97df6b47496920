/*
 * Copyright 2026 The GFSA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GFSA_CONFIG_HPP_
#define GFSA_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gfsa {

// Flat key/value configuration read from a TOML-style file:
//
//   # comment
//   [section]
//   key = 1.5
//   name = "text"
//   weights = [0.2, 0.8]
//
// Keys inside a section are stored as "section.key". Values keep their raw
// text and are converted on access.
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& raw) { values_[key] = raw; }
  // Applies "key=value" overrides as given on a command line.
  void apply_override(const std::string& assignment);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // Hash of the canonical key=value listing.
  std::uint64_t hash() const;
  std::string dump() const;

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace gfsa

#endif  // GFSA_CONFIG_HPP_
