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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iss/corpus.hpp"
#include "iss/model.hpp"
#include "iss/selection.hpp"
#include "iss/training.hpp"

namespace iss {

enum class F1Mode { kMicro, kMacro };

std::string_view to_string(F1Mode mode);
F1Mode parse_f1_mode(std::string_view name);

// Macro: unweighted mean of per-class F1 over classes present in `golds`
// (a class never predicted scores 0). Micro: F1 of pooled counts, which is
// accuracy for single-label prediction.
double compute_f1(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                  F1Mode mode);

// Training compute convention: 6 * tokens * parameters.
double flops(double param_count, double tokens);

struct ReferenceCompute {
  std::string_view model;
  std::string_view params;
  std::string_view data;
  double flops;
};

// Published compute rows, echoed in reports for scale.
std::span<const ReferenceCompute> reference_compute_rows();

// log2((n_wy * N) / (n_w * n_y)); -infinity when n_wy == 0.
double pmi_from_counts(std::size_t n, std::size_t n_w, std::size_t n_y, std::size_t n_wy);
// Example-level co-occurrence counts over `task`. Throws when the word or
// the label never occurs.
double pmi(std::span<const TaskExample> task, TokenId word, std::size_t label);
// "undefined" for -infinity, otherwise three decimals.
std::string format_pmi(double value);

// occurrences / total tokens over `docs`.
double relative_frequency(std::span<const Document> docs, TokenId word);

struct NamedDocuments {
  std::string name;
  Documents docs;
};

struct TaskWordRow {
  TokenId word = 0;
  std::size_t label = 0;
  double pmi = 0.0;
  std::vector<double> frequencies;  // one per named subset
};

struct TaskWordTable {
  std::vector<std::string> subset_names;
  std::vector<TaskWordRow> rows;  // label ascending, then PMI descending

  std::string render(const Vocabulary& vocab, const LabelMap& labels) const;
};

// Top `top_m` words by PMI per label (ties by token id), each with its
// relative token frequency in every named subset. Words seen in fewer than
// `min_count` examples are ignored.
TaskWordTable analyze_task_words(std::span<const TaskExample> task,
                                 std::span<const NamedDocuments> subsets, std::size_t top_m,
                                 std::size_t min_count = 1);

enum class BaselineStrategy { kRandom, kBm25Rank };

// kRandom: seeded uniform sample without replacement, kept in pool order.
// kBm25Rank: the first `size` ids of the pool.
Subset baseline_select(std::span<const std::string> pool, std::size_t size,
                       BaselineStrategy strategy, std::uint64_t seed = 0);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct EvalReport {
  std::string metric;
  std::string subset;
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one seed
  double flops = 0.0;

  void recompute();
};

struct PretrainOutcome {
  ModelState model;
  std::size_t tokens = 0;
  double flops = 0.0;
  std::vector<double> epoch_losses;
};

// cfg.steps mini-batch steps of l_p training over `docs` (zero steps returns
// the model unchanged). FLOPs count pretraining tokens only.
PretrainOutcome pretrain(const ModelState& model, std::span<const Document> docs,
                         const TrainConfig& cfg);

struct FinetuneOutcome {
  ModelState model;
  std::vector<std::size_t> predictions;
  double f1 = 0.0;
  double flops = 0.0;
};

FinetuneOutcome finetune_evaluate(const ModelState& model,
                                  std::span<const TaskExample> task_train,
                                  std::span<const TaskExample> task_test,
                                  const TrainConfig& cfg, F1Mode mode);

// example_id \t label \t f1 ... fh
std::string serialize_features(const ModelState& model, std::span<const TaskExample> examples,
                               const LabelMap& labels);

}  // namespace iss
