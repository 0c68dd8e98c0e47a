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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iss/corpus.hpp"
#include "iss/model.hpp"

namespace iss {

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 1;
  // When nonzero, pretraining runs exactly this many mini-batch steps
  // (cycling epochs) instead of `epochs` full passes.
  std::size_t steps = 0;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  double mask_prob = kDefaultMaskProb;
  // Weight w in l_p + w * l_t during warm-up.
  double task_weight = 1.0;
  // Draw fresh masks every epoch; otherwise each document keeps one mask for
  // the whole run.
  bool resample_masks = true;

  void validate() const;
};

// mask seed = derive(derive(seed, doc_id), epoch or 0)
std::uint64_t training_mask_seed(const TrainConfig& cfg, std::string_view doc_id,
                                 std::size_t epoch);

struct TrainResult {
  ModelState model;
  std::vector<double> epoch_losses;  // mean per-sample loss seen during each epoch
  std::size_t steps = 0;
  std::size_t tokens = 0;  // tokens of every sample that contributed a gradient
};

// Mini-batch SGD on l_p + w * l_t over the task training texts. Examples with
// a single token contribute only l_t.
TrainResult warmup_train(const ModelState& model, std::span<const TaskExample> task_train,
                         const TrainConfig& cfg);

// Mean of l_p + w * l_t over `task` using the epoch-0 masks.
double warmup_objective(const ModelState& model, std::span<const TaskExample> task,
                        const TrainConfig& cfg);

// Mini-batch SGD on l_p over `docs`. Batches are slices of a seeded
// per-epoch permutation; a batch gradient is the member sum divided by the
// nominal slot count. `skip` removes one document's slot without changing the
// schedule of any other document (the leave-one-out run). Documents with
// fewer than 2 tokens occupy their slot but contribute nothing.
TrainResult train_pretraining(const ModelState& model, std::span<const Document> docs,
                              const TrainConfig& cfg,
                              std::optional<std::size_t> skip = std::nullopt);

// Mini-batch SGD on l_t over `task_train` for cfg.epochs passes.
TrainResult train_task(const ModelState& model, std::span<const TaskExample> task_train,
                       const TrainConfig& cfg);

}  // namespace iss
