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

#include <string>

#include "iss/common.hpp"

namespace iss {
namespace {

std::uint64_t epoch_seed(const TrainConfig& cfg, std::size_t epoch) {
  return derive_seed(derive_seed(cfg.seed, "epoch"), static_cast<std::uint64_t>(epoch));
}

// Calls step(batch, epoch) for every mini-batch of the schedule. `batch`
// holds the member indices with `skip` removed; `slots` is the nominal size.
template <typename StepFn>
std::size_t run_schedule(std::size_t n, const TrainConfig& cfg, bool by_steps,
                         std::optional<std::size_t> skip, StepFn&& step) {
  if (n == 0) return 0;
  const std::size_t bs = cfg.batch_size;
  std::vector<std::size_t> batch;
  batch.reserve(bs);
  std::size_t steps = 0;
  const auto flush = [&](std::size_t slots, std::size_t epoch) {
    step(batch, slots, epoch);
    batch.clear();
    ++steps;
  };
  if (by_steps) {
    std::size_t epoch = 0;
    std::size_t pos = 0;
    auto order = seeded_permutation(n, epoch_seed(cfg, epoch));
    while (steps < cfg.steps) {
      std::size_t slots = 0;
      std::size_t batch_epoch = epoch;
      while (slots < bs) {
        if (pos == n) {
          ++epoch;
          pos = 0;
          order = seeded_permutation(n, epoch_seed(cfg, epoch));
        }
        const std::size_t idx = order[pos++];
        if (slots == 0) batch_epoch = epoch;
        ++slots;
        if (skip && idx == *skip) continue;
        batch.push_back(idx);
      }
      flush(slots, batch_epoch);
    }
    return steps;
  }
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = seeded_permutation(n, epoch_seed(cfg, epoch));
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      for (std::size_t p = start; p < end; ++p) {
        if (skip && order[p] == *skip) continue;
        batch.push_back(order[p]);
      }
      flush(end - start, epoch);
    }
  }
  return steps;
}

struct EpochMeans {
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  void add(std::size_t epoch, double loss) {
    if (sums.size() <= epoch) {
      sums.resize(epoch + 1, 0.0);
      counts.resize(epoch + 1, 0);
    }
    sums[epoch] += loss;
    ++counts[epoch];
  }
  std::vector<double> means() const {
    std::vector<double> out(sums.size(), 0.0);
    for (std::size_t i = 0; i < sums.size(); ++i) {
      if (counts[i]) out[i] = sums[i] / static_cast<double>(counts[i]);
    }
    return out;
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be finite and >= 0");
  }
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!(mask_prob > 0.0 && mask_prob < 1.0)) {
    throw ValidationError("mask probability must be in (0, 1)");
  }
}

std::uint64_t training_mask_seed(const TrainConfig& cfg, std::string_view doc_id,
                                 std::size_t epoch) {
  const std::uint64_t base = derive_seed(cfg.seed, doc_id);
  return derive_seed(base, static_cast<std::uint64_t>(cfg.resample_masks ? epoch : 0));
}

TrainResult warmup_train(const ModelState& model, std::span<const TaskExample> task_train,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (task_train.empty()) throw ValidationError("warm-up needs task training examples");
  TrainResult result{model, {}, 0, 0};
  ModelGradient grad = ModelGradient::zeros(model.dims());
  EpochMeans means;
  result.steps = run_schedule(
      task_train.size(), cfg, false, std::nullopt,
      [&](const std::vector<std::size_t>& batch, std::size_t slots, std::size_t epoch) {
        grad.set_zero();
        const double scale = 1.0 / static_cast<double>(slots);
        for (std::size_t idx : batch) {
          const auto& ex = task_train[idx];
          double loss = cfg.task_weight *
                        task_loss_grad(result.model, ex.tokens, ex.label, grad,
                                       scale * cfg.task_weight);
          if (ex.tokens.size() >= 2) {
            loss += pretrain_loss_grad(result.model, ex.tokens,
                                       training_mask_seed(cfg, ex.id, epoch),
                                       cfg.mask_prob, grad, scale);
          }
          result.tokens += ex.tokens.size();
          means.add(epoch, loss);
        }
        apply_sgd(result.model, grad, cfg.learning_rate);
      });
  result.epoch_losses = means.means();
  return result;
}

double warmup_objective(const ModelState& model, std::span<const TaskExample> task,
                        const TrainConfig& cfg) {
  if (task.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : task) {
    total += cfg.task_weight * task_loss(model, ex.tokens, ex.label);
    if (ex.tokens.size() >= 2) {
      total += pretrain_loss(model, ex.tokens, training_mask_seed(cfg, ex.id, 0),
                             cfg.mask_prob);
    }
  }
  return total / static_cast<double>(task.size());
}

TrainResult train_pretraining(const ModelState& model, std::span<const Document> docs,
                              const TrainConfig& cfg, std::optional<std::size_t> skip) {
  cfg.validate();
  if (docs.empty()) throw ValidationError("pretraining needs a non-empty subset");
  if (skip && *skip >= docs.size()) throw ValidationError("skip index out of range");
  TrainResult result{model, {}, 0, 0};
  ModelGradient grad = ModelGradient::zeros(model.dims());
  EpochMeans means;
  result.steps = run_schedule(
      docs.size(), cfg, cfg.steps > 0, skip,
      [&](const std::vector<std::size_t>& batch, std::size_t slots, std::size_t epoch) {
        bool any = false;
        grad.set_zero();
        const double scale = 1.0 / static_cast<double>(slots);
        for (std::size_t idx : batch) {
          const auto& doc = docs[idx];
          if (doc.tokens.size() < 2) continue;
          const double loss =
              pretrain_loss_grad(result.model, doc.tokens,
                                 training_mask_seed(cfg, doc.id, epoch), cfg.mask_prob,
                                 grad, scale);
          result.tokens += doc.tokens.size();
          means.add(epoch, loss);
          any = true;
        }
        if (any) apply_sgd(result.model, grad, cfg.learning_rate);
      });
  result.epoch_losses = means.means();
  return result;
}

TrainResult train_task(const ModelState& model, std::span<const TaskExample> task_train,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (task_train.empty()) throw ValidationError("finetuning needs task training examples");
  TrainResult result{model, {}, 0, 0};
  ModelGradient grad = ModelGradient::zeros(model.dims());
  EpochMeans means;
  result.steps = run_schedule(
      task_train.size(), cfg, false, std::nullopt,
      [&](const std::vector<std::size_t>& batch, std::size_t slots, std::size_t epoch) {
        grad.set_zero();
        const double scale = 1.0 / static_cast<double>(slots);
        for (std::size_t idx : batch) {
          const auto& ex = task_train[idx];
          means.add(epoch, task_loss_grad(result.model, ex.tokens, ex.label, grad, scale));
          result.tokens += ex.tokens.size();
        }
        apply_sgd(result.model, grad, cfg.learning_rate);
      });
  result.epoch_losses = means.means();
  return result;
}

}  // namespace iss
