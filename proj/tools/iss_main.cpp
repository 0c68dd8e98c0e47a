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

// iss: command-line driver for the selection pipeline.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "iss/pipeline.hpp"

namespace {

struct StageHelp {
  const char* name;
  const char* help;
};

constexpr StageHelp kCommands[] = {
    {"ingest", "tokenise the corpus and task files; build vocabulary and label map"},
    {"index", "build the BM25 index over the corpus"},
    {"retrieve", "retrieve the candidate pool with the task training texts as queries"},
    {"warmup", "warm up a fresh model on the task training data"},
    {"score", "score every (candidate, anchor) pair"},
    {"select", "select the subset and write the baseline subsets"},
    {"pretrain", "pretrain a fresh model on the chosen subset"},
    {"finetune", "fine-tune on the task and evaluate on the test set"},
    {"evaluate", "compare subsets over one or more seeds"},
    {"analyze", "task-word PMI and frequency table"},
    {"pipeline", "run every stage from ingest to analyze"},
    {"gen-synth", "write the planted synthetic benchmark and a matching config"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-based pretraining subset selection"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(iss::tool_version()));

  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::size_t workers = 1;
  std::vector<std::string> sets;
  app.add_option("--config", config, "flat key = value config file");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--out", out, "artifact directory");
  app.add_option("--workers", workers, "worker threads")
      ->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
  app.add_option("--set", sets, "override one config key (key=value)");

  for (const auto& c : kCommands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  iss::RunOptions opts;
  if (!config.empty()) opts.config_path = config;
  opts.seed = seed;
  opts.out = out;
  opts.workers = workers;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got " << s << '\n';
      return 3;
    }
    opts.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  const std::string stage = app.get_subcommands().front()->get_name();
  return iss::run_command(stage, opts, std::cerr);
}
