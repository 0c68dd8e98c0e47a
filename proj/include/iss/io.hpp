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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iss::io {

// Writes `contents` to `path + ".tmp"` and renames it over `path`, so a
// reader never observes a partially written file.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Splits on '\n'; a trailing newline does not produce an empty last line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// FNV-1a 64 over file bytes, rendered as 16 lowercase hex digits.
std::string file_checksum(const std::filesystem::path& path);
std::string checksum_hex(std::string_view bytes);

void require_exists(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view text, char sep);

}  // namespace iss::io
