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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iss/config.hpp"

namespace iss {

// Every recognised configuration key with its default.
std::span<const ConfigKey> config_schema();

// Stages run by `pipeline`, in order.
std::span<const std::string_view> pipeline_stages();
bool is_stage(std::string_view name);

std::string_view tool_version();

// seed for `label` = derive_seed(root, "stage:" + label)
std::uint64_t stage_seed(std::uint64_t root, std::string_view label);

struct RunOptions {
  std::optional<std::filesystem::path> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the file
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::size_t workers = 1;
};

struct FileRecord {
  std::string path;
  std::string checksum;
};

struct StageManifest {
  std::string stage;
  std::string config_hash;
  std::uint64_t root_seed = 0;
  std::size_t workers = 1;
  std::map<std::string, std::uint64_t> seeds;
  double seconds = 0.0;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
  double flops = 0.0;             // this stage
  double cumulative_flops = 0.0;  // this stage plus every upstream stage
  std::map<std::string, std::string> details;
};

// Resolved configuration (schema defaults, config file, overrides).
Config load_config(const RunOptions& opts);

// Runs one stage (or "pipeline", or "gen-synth") and writes its manifest as
// <out>/<stage>.manifest.json. Throws the module errors unchanged.
std::vector<StageManifest> run_stage(std::string_view stage, const RunOptions& opts);

// run_stage with errors mapped to exit codes: 0 ok, 2 missing input,
// 3 validation, 4 numeric divergence, 1 anything else.
int run_command(std::string_view stage, const RunOptions& opts, std::ostream& log);

std::string manifest_json(const StageManifest& manifest, const Config& config);

}  // namespace iss
