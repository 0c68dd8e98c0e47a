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

#include "iss/training.hpp"

#include <gtest/gtest.h>

#include "iss/common.hpp"
#include "iss/evaluation.hpp"

namespace iss {
namespace {

TaskExamples toy_task() {
  TaskExamples out;
  Rng rng(3);
  for (int i = 0; i < 12; ++i) {
    const std::size_t label = static_cast<std::size_t>(i % 2);
    std::vector<TokenId> t;
    for (int j = 0; j < 6; ++j) {
      t.push_back(static_cast<TokenId>(2 + 4 * label + rng.below(4)));
    }
    out.push_back(TaskExample{"t" + std::to_string(i), "", t, label});
  }
  return out;
}

Documents toy_docs(std::size_t n, std::size_t len) {
  Documents out;
  Rng rng(8);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TokenId> t;
    for (std::size_t j = 0; j < len; ++j) t.push_back(static_cast<TokenId>(2 + rng.below(8)));
    out.push_back(Document{"d" + std::to_string(i), "", t});
  }
  return out;
}

ModelState start() { return init_model({10, 4, 3, 2}, 42); }

TEST(Warmup, ZeroEpochsLeavesModelUnchanged) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(model_checksum(warmup_train(start(), toy_task(), cfg).model), model_checksum(start()));
}

TEST(Warmup, ObjectiveDecreases) {
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.resample_masks = false;
  const auto task = toy_task();
  const auto result = warmup_train(start(), task, cfg);
  EXPECT_LT(warmup_objective(result.model, task, cfg), warmup_objective(start(), task, cfg));
  EXPECT_EQ(result.epoch_losses.size(), 30u);
}

TEST(Warmup, Deterministic) {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 7;
  const auto a = warmup_train(start(), toy_task(), cfg);
  const auto b = warmup_train(start(), toy_task(), cfg);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  cfg.seed = 8;
  EXPECT_NE(serialize_model(warmup_train(start(), toy_task(), cfg).model),
            serialize_model(a.model));
}

TEST(Warmup, DivergenceIsReported) {
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e7;
  EXPECT_THROW(warmup_train(start(), toy_task(), cfg), DivergenceError);
}

TEST(Warmup, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(warmup_train(start(), toy_task(), cfg), ValidationError);
  EXPECT_THROW(warmup_train(start(), TaskExamples{}, TrainConfig{}), ValidationError);
}

TEST(Pretrain, ZeroStepsIsIdentityAndFree) {
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto out = pretrain(start(), toy_docs(4, 5), cfg);
  EXPECT_EQ(model_checksum(out.model), model_checksum(start()));
  EXPECT_EQ(out.tokens, 0u);
  EXPECT_EQ(out.flops, 0.0);
}

TEST(Pretrain, TokenAndFlopCounting) {
  TrainConfig cfg;
  cfg.steps = 100;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.05;
  const auto m = start();
  const auto out = pretrain(m, toy_docs(40, 20), cfg);
  EXPECT_EQ(out.tokens, 16000u);
  EXPECT_DOUBLE_EQ(out.flops, 6.0 * static_cast<double>(m.param_count()) * 16000.0);
}

TEST(Pretrain, SameSeedSameCheckpointBytes) {
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.seed = 4;
  const auto docs = toy_docs(10, 7);
  EXPECT_EQ(serialize_model(pretrain(start(), docs, cfg).model),
            serialize_model(pretrain(start(), docs, cfg).model));
}

TEST(Pretrain, OnlyPretrainingParametersMove) {
  TrainConfig cfg;
  cfg.steps = 10;
  const auto m = start();
  const auto out = train_pretraining(m, toy_docs(10, 7), cfg);
  EXPECT_EQ(out.model.task_w, m.task_w);
  EXPECT_NE(out.model.pretrain_w, m.pretrain_w);
}

// The skipped slot stays in the schedule so both runs see the same data order.
TEST(Pretrain, SkipDropsOneSlot) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  const auto docs = toy_docs(5, 6);
  const auto full = train_pretraining(start(), docs, cfg);
  const auto skipped = train_pretraining(start(), docs, cfg, 2);
  EXPECT_EQ(full.steps, 5u);
  EXPECT_EQ(skipped.steps, 5u);
  EXPECT_EQ(full.tokens - skipped.tokens, docs[2].tokens.size());
  EXPECT_THROW(train_pretraining(start(), docs, cfg, 5), ValidationError);
}

TEST(Finetune, LearnsSeparableTask) {
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.5;
  const auto task = toy_task();
  const TaskExamples train(task.begin(), task.begin() + 8);
  TaskExamples test(task.begin() + 8, task.end());
  const auto out = finetune_evaluate(start(), train, test, cfg, F1Mode::kMacro);
  EXPECT_EQ(out.predictions.size(), test.size());
  EXPECT_GT(out.f1, 0.9);
  EXPECT_THROW(finetune_evaluate(start(), train, train, cfg, F1Mode::kMacro), ValidationError);
}

}  // namespace
}  // namespace iss
