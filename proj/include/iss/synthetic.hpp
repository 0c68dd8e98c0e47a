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
#include <string>
#include <vector>

#include "iss/corpus.hpp"

namespace iss {

// Planted benchmark. Each class owns a set of topic words; task examples mix
// a few topic words of their class with class-neutral domain words and
// background noise. The corpus contains:
//   planted     coherent single-class documents dense in topic words,
//   echoes      lexical distractors built from one training query's topic
//               words plus topic words of a different class (high BM25
//               overlap, contradictory co-occurrence),
//   background  documents of background words only.
struct SynthConfig {
  std::size_t classes = 4;
  std::size_t class_words = 50;
  std::size_t domain_words = 30;
  std::size_t background_words = 1800;

  std::size_t documents = 5000;
  std::size_t planted = 500;
  std::size_t echoes_per_query = 5;

  std::size_t train_per_class = 10;
  std::size_t valid_per_class = 16;
  std::size_t test_per_class = 50;

  std::size_t example_class_words = 3;
  std::size_t example_domain_words = 3;
  std::size_t example_background_words = 3;

  std::size_t planted_class_words = 8;
  std::size_t planted_domain_words = 2;
  std::size_t planted_background_words = 4;

  std::size_t echo_foreign_words = 5;
  std::size_t background_doc_words = 14;

  std::uint64_t seed = 0;
};

struct SynthBenchmark {
  std::vector<RawRecord> corpus;
  std::vector<RawRecord> train;
  std::vector<RawRecord> valid;
  std::vector<RawRecord> test;
  std::vector<std::string> planted_ids;  // sorted
  std::vector<std::string> echo_ids;     // sorted
};

SynthBenchmark generate_synthetic(const SynthConfig& cfg);

// corpus.jsonl, task_train.jsonl, task_valid.jsonl, task_test.jsonl,
// planted.txt and echoes.txt under `dir`.
void write_synthetic(const SynthBenchmark& bench, const std::filesystem::path& dir);

std::string records_to_jsonl(const std::vector<RawRecord>& records, bool with_label);

}  // namespace iss
