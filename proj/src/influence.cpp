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

#include "iss/influence.hpp"

#include <cmath>

#include "iss/common.hpp"

namespace iss {

std::uint64_t scoring_mask_seed(std::uint64_t seed, std::string_view doc_id) {
  return derive_seed(derive_seed(seed, "score-mask"), doc_id);
}

double influence_score(const Eigen::VectorXd& g_p, const Eigen::VectorXd& g_t, double lr) {
  if (g_p.size() != g_t.size()) throw ValidationError("gradient length mismatch");
  return lr * g_t.dot(g_p);
}

double influence_score(const GradientVector& g_p, const GradientVector& g_t, double lr) {
  return influence_score(g_p.values, g_t.values, lr);
}

double one_step_delta(const std::function<double(const Eigen::VectorXd&)>& anchor_loss,
                      const Eigen::VectorXd& theta, const Eigen::VectorXd& g_p, double lr) {
  if (lr == 0.0) return 0.0;
  const Eigen::VectorXd next = theta - lr * g_p;
  return anchor_loss(theta) - anchor_loss(next);
}

double step_delta_oracle(const ModelState& model, const Document& z_p,
                         const TaskExample& anchor, double lr, std::uint64_t mask_seed,
                         double mask_prob) {
  const auto g_p = pretrain_last_layer_grad(model, z_p, mask_seed, mask_prob);
  const auto sample = detail::prepare_task(model, anchor.tokens, anchor.label);
  const auto loss = [&](const Eigen::VectorXd& theta) {
    return detail::last_layer_loss_grad(model, sample, theta, nullptr);
  };
  return one_step_delta(loss, flatten_last_layer(model), g_p.values, lr);
}

HessianEstimate last_layer_hessian(const ModelState& model,
                                   std::span<const Document> candidates,
                                   std::uint64_t seed, double damping, double mask_prob,
                                   double step, std::size_t workers) {
  if (candidates.empty()) throw ValidationError("hessian needs a non-empty candidate set");
  if (!(damping >= 0.0)) throw ValidationError("damping must be >= 0");
  const std::size_t q = model.last_layer_size();
  if (q > kMaxHessianSize) {
    throw ValidationError("last layer too large for an exact hessian (q = " +
                          std::to_string(q) + ")");
  }
  std::vector<detail::LastLayerSample> samples;
  samples.reserve(candidates.size());
  for (const auto& doc : candidates) {
    samples.push_back(detail::prepare_pretraining(
        model, doc.tokens, scoring_mask_seed(seed, doc.id), mask_prob));
  }
  const Eigen::VectorXd theta = flatten_last_layer(model);
  const auto qi = static_cast<Eigen::Index>(q);
  Eigen::MatrixXd h(qi, qi);
  // One column per task; candidates are summed in order, so the result does
  // not depend on the worker count.
  parallel_for(q, workers, [&](std::size_t j) {
    Eigen::VectorXd plus = theta;
    Eigen::VectorXd minus = theta;
    plus(static_cast<Eigen::Index>(j)) += step;
    minus(static_cast<Eigen::Index>(j)) -= step;
    Eigen::VectorXd col = Eigen::VectorXd::Zero(qi);
    Eigen::VectorXd gp;
    Eigen::VectorXd gm;
    for (const auto& s : samples) {
      detail::last_layer_loss_grad(model, s, plus, &gp);
      detail::last_layer_loss_grad(model, s, minus, &gm);
      col += gp - gm;
    }
    h.col(static_cast<Eigen::Index>(j)) =
        col / (2.0 * step * static_cast<double>(samples.size()));
  });
  HessianEstimate est;
  est.matrix = 0.5 * (h + h.transpose());
  est.damping = damping;
  est.built_from = std::to_string(candidates.size()) + " candidates";
  return est;
}

std::pair<ModelState, double> fit_last_layer(const ModelState& model,
                                             std::span<const Document> candidates,
                                             std::uint64_t seed, double lr,
                                             std::size_t steps, double mask_prob) {
  if (candidates.empty()) throw ValidationError("fit needs a non-empty candidate set");
  if (!(lr > 0.0)) throw ValidationError("fit learning rate must be > 0");
  std::vector<detail::LastLayerSample> samples;
  samples.reserve(candidates.size());
  for (const auto& doc : candidates) {
    samples.push_back(detail::prepare_pretraining(
        model, doc.tokens, scoring_mask_seed(seed, doc.id), mask_prob));
  }
  Eigen::VectorXd theta = flatten_last_layer(model);
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd g;
  const double n = static_cast<double>(samples.size());
  double loss = 0.0;
  for (std::size_t it = 0; it <= steps; ++it) {
    grad.setZero();
    loss = 0.0;
    for (const auto& s : samples) {
      loss += detail::last_layer_loss_grad(model, s, theta, &g);
      grad += g;
    }
    loss /= n;
    if (it == steps) break;
    theta -= (lr / n) * grad;
    if (!theta.allFinite()) throw DivergenceError("divergence while fitting the last layer");
  }
  ModelState out = model;
  set_last_layer(out, theta);
  return {std::move(out), loss};
}

DampedInverse::DampedInverse(const HessianEstimate& hessian)
    : size_(static_cast<std::size_t>(hessian.matrix.rows())) {
  if (hessian.matrix.rows() != hessian.matrix.cols()) {
    throw ValidationError("hessian must be square");
  }
  Eigen::MatrixXd damped = hessian.matrix;
  damped.diagonal().array() += hessian.damping;
  llt_.compute(damped);
  if (llt_.info() != Eigen::Success) {
    throw ValidationError("H + lambda*I is not positive definite at lambda = " +
                          format_double(hessian.damping) + "; try a larger damping");
  }
}

Eigen::VectorXd DampedInverse::solve(const Eigen::VectorXd& rhs) const {
  if (static_cast<std::size_t>(rhs.size()) != size_) {
    throw ValidationError("gradient length mismatch");
  }
  return llt_.solve(rhs);
}

double exact_influence(const DampedInverse& inverse, const Eigen::VectorXd& g_p,
                       const Eigen::VectorXd& g_t) {
  if (g_p.size() != g_t.size()) throw ValidationError("gradient length mismatch");
  return -g_t.dot(inverse.solve(g_p));
}

double exact_influence(const ModelState& model, std::span<const Document> candidate_set,
                       const Document& z_p, const TaskExample& anchor, double damping,
                       std::uint64_t seed, double mask_prob) {
  const auto hessian = last_layer_hessian(model, candidate_set, seed, damping, mask_prob);
  const DampedInverse inverse(hessian);
  const auto g_p =
      pretrain_last_layer_grad(model, z_p, scoring_mask_seed(seed, z_p.id), mask_prob);
  const auto g_t = task_last_layer_grad(model, anchor);
  return exact_influence(inverse, g_p.values, g_t.values);
}

LeaveOneOut::LeaveOneOut(const ModelState& start, const TrainConfig& cfg,
                         std::span<const Document> train_set,
                         std::span<const TaskExample> anchors)
    : start_(start), cfg_(cfg), train_set_(train_set), anchors_(anchors) {
  if (train_set.empty()) throw ValidationError("leave-one-out needs a training set");
  if (train_set.size() > kMaxLooTrainSize) {
    throw ValidationError("leave-one-out training set larger than " +
                          std::to_string(kMaxLooTrainSize));
  }
  const auto with = train_pretraining(start_, train_set_, cfg_);
  for (const auto& a : anchors_) with_losses_.push_back(task_loss(with.model, a));
}

std::vector<double> LeaveOneOut::removal_effect(std::size_t index) const {
  if (index >= train_set_.size()) throw ValidationError("z_p is not in the training set");
  const auto without = train_pretraining(start_, train_set_, cfg_, index);
  std::vector<double> out;
  out.reserve(anchors_.size());
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    out.push_back(task_loss(without.model, anchors_[i]) - with_losses_[i]);
  }
  return out;
}

double loo_influence(const ModelState& start, const TrainConfig& cfg,
                     std::span<const Document> train_set, std::size_t z_p_index,
                     const TaskExample& anchor) {
  const LeaveOneOut loo(start, cfg, train_set, std::span<const TaskExample>(&anchor, 1));
  return loo.removal_effect(z_p_index).front();
}

}  // namespace iss
