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

#include "iss/config.hpp"

#include <cerrno>
#include <cstdlib>

#include "iss/common.hpp"
#include "iss/io.hpp"

namespace iss {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw ValidationError("config line " + std::to_string(line_no) + ": bad key '" +
                            std::string(key) + "'");
    }
    if (cfg.has(key)) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key " +
                            std::string(key));
    }
    cfg.set(std::string(key), std::string(value));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

Config Config::resolve(std::span<const ConfigKey> schema, const Config& overrides) {
  Config out;
  for (const auto& key : schema) out.set(std::string(key.name), std::string(key.default_value));
  for (const auto& [key, value] : overrides.entries()) {
    if (!out.has(key)) throw ValidationError("unknown config key " + key);
    out.set(key, value);
  }
  return out;
}

void Config::set(std::string key, std::string value) {
  entries_.insert_or_assign(std::move(key), std::move(value));
}

bool Config::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const std::string& Config::get(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError("missing config key " + std::string(key));
  return it->second;
}

double Config::get_double(std::string_view key) const {
  const auto& v = get(key);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ValidationError("config key " + std::string(key) + ": not a number: " + v);
  }
  return d;
}

std::uint64_t Config::get_u64(std::string_view key) const {
  const auto& v = get(key);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError("config key " + std::string(key) + ": not a non-negative integer: " +
                          v);
  }
  errno = 0;
  const auto n = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ValidationError("config key " + std::string(key) + ": out of range");
  return n;
}

std::size_t Config::get_size(std::string_view key) const {
  return static_cast<std::size_t>(get_u64(key));
}

bool Config::get_bool(std::string_view key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config key " + std::string(key) + ": expected true or false: " + v);
}

std::vector<std::string> Config::get_list(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& part : io::split(get(key), ',')) {
    const auto item = trim(part);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

std::string Config::hash() const { return io::checksum_hex(canonical()); }

}  // namespace iss
