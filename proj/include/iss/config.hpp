// Copyright 2026 The ISS Authors.
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
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iss {

// A documented configuration key and its default value.
struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

// Flat "key = value" configuration. Blank lines and lines starting with '#'
// are ignored; keys are namespaced with a dot ("warmup.epochs").
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  // Keys missing from `overrides` take the schema default; keys outside the
  // schema are rejected.
  static Config resolve(std::span<const ConfigKey> schema, const Config& overrides);

  void set(std::string key, std::string value);
  bool has(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;

  // "key = value\n" lines in key order; the hash is FNV-1a 64 of that text.
  std::string canonical() const;
  std::string hash() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace iss
