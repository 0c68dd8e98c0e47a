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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "iss/corpus.hpp"

namespace iss {

inline constexpr double kDefaultMaskProb = 0.15;

struct ModelDims {
  std::size_t vocab = 0;    // V
  std::size_t embed = 0;    // d
  std::size_t hidden = 0;   // h
  std::size_t classes = 0;  // C

  bool operator==(const ModelDims&) const = default;
};

// Feature extractor (embeddings + final encoder layer) with a masked-token
// pretraining head and a classification head:
//
//   x        = mean of embeddings rows over the input tokens      (d)
//   features = tanh(encoder_w^T x + encoder_b)                    (h)
//   logits   = head_w^T features + head_b                         (V or C)
struct ModelState {
  Eigen::MatrixXd embeddings;  // V x d
  Eigen::MatrixXd encoder_w;   // d x h
  Eigen::VectorXd encoder_b;   // h
  Eigen::MatrixXd pretrain_w;  // h x V
  Eigen::VectorXd pretrain_b;  // V
  Eigen::MatrixXd task_w;      // h x C
  Eigen::VectorXd task_b;      // C
  std::uint64_t seed = 0;

  ModelDims dims() const;
  std::size_t param_count() const;
  // d*h + h: the (encoder_w, encoder_b) block.
  std::size_t last_layer_size() const;
  bool all_finite() const;
};

// Dense gradient with the same shapes as ModelState.
struct ModelGradient {
  Eigen::MatrixXd embeddings;
  Eigen::MatrixXd encoder_w;
  Eigen::VectorXd encoder_b;
  Eigen::MatrixXd pretrain_w;
  Eigen::VectorXd pretrain_b;
  Eigen::MatrixXd task_w;
  Eigen::VectorXd task_b;

  static ModelGradient zeros(const ModelDims& dims);
  void set_zero();
  ModelGradient& operator+=(const ModelGradient& other);
  ModelGradient& operator*=(double factor);
};

enum class LossKind { kPretraining, kTask };

std::string_view to_string(LossKind kind);

// Flattened gradient of one loss with respect to (encoder_w, encoder_b):
// encoder_w row-major, then encoder_b.
struct GradientVector {
  Eigen::VectorXd values;
  std::string owner;
  LossKind kind = LossKind::kPretraining;
};

// Entries uniform in [-0.1, 0.1] from Rng(seed), biases zero. Tensors are
// filled in declaration order, each row-major.
ModelState init_model(const ModelDims& dims, std::uint64_t seed);

Eigen::VectorXd pool_embeddings(const ModelState& model, std::span<const TokenId> tokens);
Eigen::VectorXd encode(const ModelState& model, std::span<const TokenId> tokens);

// ceil(mask_prob * len) distinct positions in ascending order, chosen by
// Rng(mask_seed).
std::vector<std::size_t> mask_positions(std::size_t length, std::uint64_t mask_seed,
                                        double mask_prob = kDefaultMaskProb);

// Mean cross-entropy of the true token at every masked position, with all
// masked positions replaced by MASK before pooling. Needs >= 2 tokens.
double pretrain_loss(const ModelState& model, std::span<const TokenId> tokens,
                     std::uint64_t mask_seed, double mask_prob = kDefaultMaskProb);

double task_loss(const ModelState& model, std::span<const TokenId> tokens,
                 std::size_t label);
double task_loss(const ModelState& model, const TaskExample& example);

std::vector<double> task_logits(const ModelState& model, std::span<const TokenId> tokens);
std::size_t predict(const ModelState& model, std::span<const TokenId> tokens);

// Full-parameter gradients; `scale * gradient` is added to `grad` and the loss
// is returned.
double pretrain_loss_grad(const ModelState& model, std::span<const TokenId> tokens,
                          std::uint64_t mask_seed, double mask_prob,
                          ModelGradient& grad, double scale = 1.0);
double task_loss_grad(const ModelState& model, std::span<const TokenId> tokens,
                      std::size_t label, ModelGradient& grad, double scale = 1.0);

GradientVector pretrain_last_layer_grad(const ModelState& model, const Document& doc,
                                        std::uint64_t mask_seed,
                                        double mask_prob = kDefaultMaskProb);
GradientVector task_last_layer_grad(const ModelState& model, const TaskExample& example);

// Dispatches on `kind`; the task loss ignores mask_seed, the pretraining loss
// ignores the label.
GradientVector last_layer_grad(const ModelState& model, std::span<const TokenId> tokens,
                               std::size_t label, LossKind kind, std::uint64_t mask_seed,
                               double mask_prob = kDefaultMaskProb);

Eigen::VectorXd flatten_last_layer(const ModelState& model);
void set_last_layer(ModelState& model, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_last_layer(const ModelGradient& grad);

inline constexpr double kDivergenceBound = 1e6;

// In-place p <- p - lr * g on every tensor; throws DivergenceError when any
// parameter becomes non-finite or exceeds kDivergenceBound in magnitude.
void apply_sgd(ModelState& model, const ModelGradient& grad, double learning_rate);
// Functional form: the input is not modified.
ModelState sgd_step(const ModelState& model, const ModelGradient& grad,
                    double learning_rate);

namespace detail {

// A loss evaluation reduced to what the last encoder layer sees: the pooled
// input and the head targets.
struct LastLayerSample {
  Eigen::VectorXd pooled;
  std::vector<TokenId> targets;  // masked tokens, or the single label
  LossKind kind = LossKind::kPretraining;
};

LastLayerSample prepare_pretraining(const ModelState& model,
                                    std::span<const TokenId> tokens,
                                    std::uint64_t mask_seed, double mask_prob);
LastLayerSample prepare_task(const ModelState& model, std::span<const TokenId> tokens,
                             std::size_t label);

// Loss and flattened (encoder_w, encoder_b) gradient with the last layer set
// to `flat_last_layer`; every other parameter comes from `model`.
double last_layer_loss_grad(const ModelState& model, const LastLayerSample& sample,
                            const Eigen::VectorXd& flat_last_layer,
                            Eigen::VectorXd* grad);

}  // namespace detail

// Text checkpoint: a manifest header followed by every parameter as a C99
// hexadecimal float, one per line, in the order given by the header.
std::string serialize_model(const ModelState& model);
ModelState parse_model(std::string_view text);
// FNV-1a of the serialized checkpoint.
std::string model_checksum(const ModelState& model);

}  // namespace iss
