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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iss/corpus.hpp"
#include "iss/model.hpp"
#include "iss/training.hpp"

namespace iss {

// Higher is better: the predicted reduction of the anchor loss.
struct InfluenceRecord {
  std::string candidate;
  std::string anchor;
  double score = 0.0;
};

// Mask seed used for a candidate's l_p gradient throughout one scoring run.
std::uint64_t scoring_mask_seed(std::uint64_t seed, std::string_view doc_id);

// lr * <g_t, g_p>: first-order prediction of l_t(z', theta) - l_t(z', theta')
// after one SGD step on the candidate.
double influence_score(const Eigen::VectorXd& g_p, const Eigen::VectorXd& g_t, double lr);
double influence_score(const GradientVector& g_p, const GradientVector& g_t, double lr);

// anchor_loss(theta) - anchor_loss(theta - lr * g_p).
double one_step_delta(const std::function<double(const Eigen::VectorXd&)>& anchor_loss,
                      const Eigen::VectorXd& theta, const Eigen::VectorXd& g_p, double lr);

// Exact change of the anchor's task loss after one SGD step on l_p(z_p)
// restricted to the last encoder layer. `model` is not modified.
double step_delta_oracle(const ModelState& model, const Document& z_p,
                         const TaskExample& anchor, double lr, std::uint64_t mask_seed,
                         double mask_prob = kDefaultMaskProb);

struct HessianEstimate {
  Eigen::MatrixXd matrix;  // q x q, symmetric
  double damping = 0.0;
  std::string built_from;
};

inline constexpr std::size_t kMaxHessianSize = 4096;
inline constexpr double kDefaultDamping = 1e-3;
inline constexpr double kHessianStep = 1e-4;

// Mean last-layer Hessian of l_p over `candidates`, by central differences of
// the analytic gradient, symmetrized. Each candidate uses
// scoring_mask_seed(seed, id).
HessianEstimate last_layer_hessian(const ModelState& model,
                                   std::span<const Document> candidates,
                                   std::uint64_t seed, double damping = kDefaultDamping,
                                   double mask_prob = kDefaultMaskProb,
                                   double step = kHessianStep, std::size_t workers = 1);

// Cholesky factor of H + lambda * I.
// Full-batch gradient descent on the mean candidate l_p over the last encoder
// layer only, with the scoring masks. Brings the snapshot near a stationary
// point of the candidate loss, where the last-layer hessian is expected to be
// positive semi-definite. Returns the fitted model and its final mean loss.
std::pair<ModelState, double> fit_last_layer(const ModelState& model,
                                             std::span<const Document> candidates,
                                             std::uint64_t seed, double lr,
                                             std::size_t steps,
                                             double mask_prob = kDefaultMaskProb);

class DampedInverse {
 public:
  explicit DampedInverse(const HessianEstimate& hessian);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  std::size_t size() const { return size_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::size_t size_ = 0;
};

// Signed influence -g_t^T (H + lambda I)^{-1} g_p. More negative means z_p
// helps the anchor more.
double exact_influence(const DampedInverse& inverse, const Eigen::VectorXd& g_p,
                       const Eigen::VectorXd& g_t);

// Builds the Hessian from `candidate_set` and evaluates one pair.
double exact_influence(const ModelState& model, std::span<const Document> candidate_set,
                       const Document& z_p, const TaskExample& anchor, double damping,
                       std::uint64_t seed, double mask_prob = kDefaultMaskProb);

// Higher-is-better orientation shared with influence_score.
inline double influence_benefit(double signed_influence) { return -signed_influence; }

inline constexpr std::size_t kMaxLooTrainSize = 500;

// Leave-one-out retraining by l_p pretraining from `start`. The reference
// run is trained once; removal_effect(i) retrains with slot i skipped and
// returns, per anchor, l_t(anchor, without) - l_t(anchor, with). Positive
// means the document helped.
class LeaveOneOut {
 public:
  LeaveOneOut(const ModelState& start, const TrainConfig& cfg,
              std::span<const Document> train_set, std::span<const TaskExample> anchors);

  const std::vector<double>& reference_losses() const { return with_losses_; }
  std::vector<double> removal_effect(std::size_t index) const;

 private:
  const ModelState& start_;
  TrainConfig cfg_;
  std::span<const Document> train_set_;
  std::span<const TaskExample> anchors_;
  std::vector<double> with_losses_;
};

double loo_influence(const ModelState& start, const TrainConfig& cfg,
                     std::span<const Document> train_set, std::size_t z_p_index,
                     const TaskExample& anchor);

}  // namespace iss
