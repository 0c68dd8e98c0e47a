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

#include "iss/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "iss/common.hpp"
#include "iss/io.hpp"

namespace iss {
namespace {

template <typename Fn>
void for_each_tensor(ModelState& m, Fn&& fn) {
  fn(m.embeddings);
  fn(m.encoder_w);
  fn(m.encoder_b);
  fn(m.pretrain_w);
  fn(m.pretrain_b);
  fn(m.task_w);
  fn(m.task_b);
}

template <typename Fn>
void for_each_tensor(const ModelState& m, Fn&& fn) {
  fn(m.embeddings);
  fn(m.encoder_w);
  fn(m.encoder_b);
  fn(m.pretrain_w);
  fn(m.pretrain_b);
  fn(m.task_w);
  fn(m.task_b);
}

template <typename Fn>
void for_each_tensor_pair(ModelState& m, const ModelGradient& g, Fn&& fn) {
  fn(m.embeddings, g.embeddings);
  fn(m.encoder_w, g.encoder_w);
  fn(m.encoder_b, g.encoder_b);
  fn(m.pretrain_w, g.pretrain_w);
  fn(m.pretrain_b, g.pretrain_b);
  fn(m.task_w, g.task_w);
  fn(m.task_b, g.task_b);
}

template <typename Fn>
void for_each_tensor_pair(ModelGradient& a, const ModelGradient& b, Fn&& fn) {
  fn(a.embeddings, b.embeddings);
  fn(a.encoder_w, b.encoder_w);
  fn(a.encoder_b, b.encoder_b);
  fn(a.pretrain_w, b.pretrain_w);
  fn(a.pretrain_b, b.pretrain_b);
  fn(a.task_w, b.task_w);
  fn(a.task_b, b.task_b);
}

template <typename Derived>
void fill_uniform(Eigen::MatrixBase<Derived>& t, Rng& rng) {
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = rng.uniform(-0.1, 0.1);
  }
}

void check_tokens(const ModelState& model, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ValidationError("cannot encode an empty token sequence");
  const auto v = static_cast<TokenId>(model.embeddings.rows());
  for (TokenId t : tokens) {
    if (t >= v) throw ValidationError("token id " + std::to_string(t) + " out of range");
  }
}

// p = softmax(logits); returns log-sum-exp.
double softmax(const Eigen::VectorXd& logits, Eigen::VectorXd& p) {
  const double mx = logits.maxCoeff();
  p = (logits.array() - mx).exp();
  const double sum = p.sum();
  p /= sum;
  return mx + std::log(sum);
}

struct Forward {
  Eigen::VectorXd pre;       // encoder_w^T x + encoder_b
  Eigen::VectorXd features;  // tanh(pre)
  Eigen::VectorXd probs;
  double loss = 0.0;
};

const Eigen::MatrixXd& head_w(const ModelState& m, LossKind kind) {
  return kind == LossKind::kPretraining ? m.pretrain_w : m.task_w;
}
const Eigen::VectorXd& head_b(const ModelState& m, LossKind kind) {
  return kind == LossKind::kPretraining ? m.pretrain_b : m.task_b;
}

Forward forward(const ModelState& m, const Eigen::VectorXd& pooled,
                const Eigen::MatrixXd& enc_w, const Eigen::VectorXd& enc_b,
                const std::vector<TokenId>& targets, LossKind kind) {
  Forward fw;
  fw.pre = enc_w.transpose() * pooled + enc_b;
  fw.features = fw.pre.array().tanh();
  const Eigen::VectorXd logits = head_w(m, kind).transpose() * fw.features + head_b(m, kind);
  const double lse = softmax(logits, fw.probs);
  double total = 0.0;
  for (TokenId t : targets) total += lse - logits(t);
  fw.loss = total / static_cast<double>(targets.size());
  return fw;
}

// d loss / d logits = probs - mean one-hot(targets).
Eigen::VectorXd logit_grad(const Forward& fw, const std::vector<TokenId>& targets) {
  Eigen::VectorXd g = fw.probs;
  const double w = 1.0 / static_cast<double>(targets.size());
  for (TokenId t : targets) g(t) -= w;
  return g;
}

std::vector<TokenId> masked_context(std::span<const TokenId> tokens,
                                    const std::vector<std::size_t>& masked,
                                    std::vector<TokenId>& targets) {
  std::vector<TokenId> context(tokens.begin(), tokens.end());
  targets.clear();
  for (std::size_t pos : masked) {
    targets.push_back(context[pos]);
    context[pos] = kMaskId;
  }
  return context;
}

double full_loss_grad(const ModelState& m, std::span<const TokenId> context,
                      const std::vector<TokenId>& targets, LossKind kind,
                      ModelGradient& grad, double scale) {
  const Eigen::VectorXd pooled = pool_embeddings(m, context);
  const Forward fw = forward(m, pooled, m.encoder_w, m.encoder_b, targets, kind);
  const Eigen::VectorXd dlogits = logit_grad(fw, targets);
  if (kind == LossKind::kPretraining) {
    grad.pretrain_w.noalias() += scale * fw.features * dlogits.transpose();
    grad.pretrain_b += scale * dlogits;
  } else {
    grad.task_w.noalias() += scale * fw.features * dlogits.transpose();
    grad.task_b += scale * dlogits;
  }
  const Eigen::VectorXd dfeat = head_w(m, kind) * dlogits;
  const Eigen::VectorXd dpre =
      dfeat.array() * (1.0 - fw.features.array().square());
  grad.encoder_w.noalias() += scale * pooled * dpre.transpose();
  grad.encoder_b += scale * dpre;
  const Eigen::VectorXd dpooled =
      (scale / static_cast<double>(context.size())) * (m.encoder_w * dpre);
  for (TokenId t : context) grad.embeddings.row(t) += dpooled.transpose();
  return fw.loss;
}

}  // namespace

ModelDims ModelState::dims() const {
  return ModelDims{static_cast<std::size_t>(embeddings.rows()),
                   static_cast<std::size_t>(embeddings.cols()),
                   static_cast<std::size_t>(encoder_w.cols()),
                   static_cast<std::size_t>(task_w.cols())};
}

std::size_t ModelState::param_count() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

std::size_t ModelState::last_layer_size() const {
  return static_cast<std::size_t>(encoder_w.size() + encoder_b.size());
}

bool ModelState::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&](const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

ModelGradient ModelGradient::zeros(const ModelDims& d) {
  ModelGradient g;
  const auto V = static_cast<Eigen::Index>(d.vocab);
  const auto E = static_cast<Eigen::Index>(d.embed);
  const auto H = static_cast<Eigen::Index>(d.hidden);
  const auto C = static_cast<Eigen::Index>(d.classes);
  g.embeddings = Eigen::MatrixXd::Zero(V, E);
  g.encoder_w = Eigen::MatrixXd::Zero(E, H);
  g.encoder_b = Eigen::VectorXd::Zero(H);
  g.pretrain_w = Eigen::MatrixXd::Zero(H, V);
  g.pretrain_b = Eigen::VectorXd::Zero(V);
  g.task_w = Eigen::MatrixXd::Zero(H, C);
  g.task_b = Eigen::VectorXd::Zero(C);
  return g;
}

void ModelGradient::set_zero() {
  embeddings.setZero();
  encoder_w.setZero();
  encoder_b.setZero();
  pretrain_w.setZero();
  pretrain_b.setZero();
  task_w.setZero();
  task_b.setZero();
}

ModelGradient& ModelGradient::operator+=(const ModelGradient& other) {
  for_each_tensor_pair(*this, other, [](auto& a, const auto& b) { a += b; });
  return *this;
}

ModelGradient& ModelGradient::operator*=(double factor) {
  embeddings *= factor;
  encoder_w *= factor;
  encoder_b *= factor;
  pretrain_w *= factor;
  pretrain_b *= factor;
  task_w *= factor;
  task_b *= factor;
  return *this;
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kPretraining ? "pretraining" : "task";
}

ModelState init_model(const ModelDims& d, std::uint64_t seed) {
  if (d.vocab < 1 || d.embed < 1 || d.hidden < 1 || d.classes < 1) {
    throw ValidationError("model dimensions must be >= 1");
  }
  ModelState m;
  m.seed = seed;
  const auto V = static_cast<Eigen::Index>(d.vocab);
  const auto E = static_cast<Eigen::Index>(d.embed);
  const auto H = static_cast<Eigen::Index>(d.hidden);
  const auto C = static_cast<Eigen::Index>(d.classes);
  Rng rng(seed);
  m.embeddings.resize(V, E);
  fill_uniform(m.embeddings, rng);
  m.encoder_w.resize(E, H);
  fill_uniform(m.encoder_w, rng);
  m.encoder_b = Eigen::VectorXd::Zero(H);
  m.pretrain_w.resize(H, V);
  fill_uniform(m.pretrain_w, rng);
  m.pretrain_b = Eigen::VectorXd::Zero(V);
  m.task_w.resize(H, C);
  fill_uniform(m.task_w, rng);
  m.task_b = Eigen::VectorXd::Zero(C);
  return m;
}

Eigen::VectorXd pool_embeddings(const ModelState& model, std::span<const TokenId> tokens) {
  check_tokens(model, tokens);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.embeddings.cols());
  for (TokenId t : tokens) x += model.embeddings.row(t).transpose();
  return x / static_cast<double>(tokens.size());
}

Eigen::VectorXd encode(const ModelState& model, std::span<const TokenId> tokens) {
  const Eigen::VectorXd x = pool_embeddings(model, tokens);
  return (model.encoder_w.transpose() * x + model.encoder_b).array().tanh();
}

std::vector<std::size_t> mask_positions(std::size_t length, std::uint64_t mask_seed,
                                        double mask_prob) {
  if (!(mask_prob > 0.0 && mask_prob < 1.0)) {
    throw ValidationError("mask probability must be in (0, 1)");
  }
  // The epsilon keeps products such as 0.15 * 20 from rounding up past an
  // exact integer.
  auto count = static_cast<std::size_t>(
      std::ceil(mask_prob * static_cast<double>(length) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, length);
  std::vector<std::size_t> order(length);
  for (std::size_t i = 0; i < length; ++i) order[i] = i;
  Rng rng(mask_seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + rng.below(length - i)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

namespace detail {

LastLayerSample prepare_pretraining(const ModelState& model,
                                    std::span<const TokenId> tokens,
                                    std::uint64_t mask_seed, double mask_prob) {
  if (tokens.size() < 2) {
    throw ValidationError("pretraining loss needs at least 2 tokens");
  }
  LastLayerSample s;
  s.kind = LossKind::kPretraining;
  const auto masked = mask_positions(tokens.size(), mask_seed, mask_prob);
  const auto context = masked_context(tokens, masked, s.targets);
  s.pooled = pool_embeddings(model, context);
  return s;
}

LastLayerSample prepare_task(const ModelState& model, std::span<const TokenId> tokens,
                             std::size_t label) {
  if (label >= static_cast<std::size_t>(model.task_w.cols())) {
    throw ValidationError("label " + std::to_string(label) + " out of range");
  }
  LastLayerSample s;
  s.kind = LossKind::kTask;
  s.targets = {static_cast<TokenId>(label)};
  s.pooled = pool_embeddings(model, tokens);
  return s;
}

double last_layer_loss_grad(const ModelState& model, const LastLayerSample& sample,
                            const Eigen::VectorXd& flat, Eigen::VectorXd* grad) {
  const auto d = model.encoder_w.rows();
  const auto h = model.encoder_w.cols();
  Eigen::MatrixXd w(d, h);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) w(i, j) = flat(i * h + j);
  }
  const Eigen::VectorXd b = flat.tail(h);
  const Forward fw = forward(model, sample.pooled, w, b, sample.targets, sample.kind);
  if (grad != nullptr) {
    const Eigen::VectorXd dlogits = logit_grad(fw, sample.targets);
    const Eigen::VectorXd dfeat = head_w(model, sample.kind) * dlogits;
    const Eigen::VectorXd dpre = dfeat.array() * (1.0 - fw.features.array().square());
    grad->resize(d * h + h);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < h; ++j) (*grad)(i * h + j) = sample.pooled(i) * dpre(j);
    }
    grad->tail(h) = dpre;
  }
  return fw.loss;
}

}  // namespace detail

double pretrain_loss(const ModelState& model, std::span<const TokenId> tokens,
                     std::uint64_t mask_seed, double mask_prob) {
  const auto s = detail::prepare_pretraining(model, tokens, mask_seed, mask_prob);
  return forward(model, s.pooled, model.encoder_w, model.encoder_b, s.targets, s.kind).loss;
}

double task_loss(const ModelState& model, std::span<const TokenId> tokens,
                 std::size_t label) {
  const auto s = detail::prepare_task(model, tokens, label);
  return forward(model, s.pooled, model.encoder_w, model.encoder_b, s.targets, s.kind).loss;
}

double task_loss(const ModelState& model, const TaskExample& example) {
  return task_loss(model, example.tokens, example.label);
}

std::vector<double> task_logits(const ModelState& model, std::span<const TokenId> tokens) {
  const Eigen::VectorXd f = encode(model, tokens);
  const Eigen::VectorXd logits = model.task_w.transpose() * f + model.task_b;
  return {logits.data(), logits.data() + logits.size()};
}

std::size_t predict(const ModelState& model, std::span<const TokenId> tokens) {
  const auto logits = task_logits(model, tokens);
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

double pretrain_loss_grad(const ModelState& model, std::span<const TokenId> tokens,
                          std::uint64_t mask_seed, double mask_prob,
                          ModelGradient& grad, double scale) {
  if (tokens.size() < 2) {
    throw ValidationError("pretraining loss needs at least 2 tokens");
  }
  check_tokens(model, tokens);
  std::vector<TokenId> targets;
  const auto masked = mask_positions(tokens.size(), mask_seed, mask_prob);
  const auto context = masked_context(tokens, masked, targets);
  return full_loss_grad(model, context, targets, LossKind::kPretraining, grad, scale);
}

double task_loss_grad(const ModelState& model, std::span<const TokenId> tokens,
                      std::size_t label, ModelGradient& grad, double scale) {
  check_tokens(model, tokens);
  if (label >= static_cast<std::size_t>(model.task_w.cols())) {
    throw ValidationError("label " + std::to_string(label) + " out of range");
  }
  const std::vector<TokenId> targets{static_cast<TokenId>(label)};
  return full_loss_grad(model, tokens, targets, LossKind::kTask, grad, scale);
}

GradientVector last_layer_grad(const ModelState& model, std::span<const TokenId> tokens,
                               std::size_t label, LossKind kind, std::uint64_t mask_seed,
                               double mask_prob) {
  const auto sample = kind == LossKind::kPretraining
                          ? detail::prepare_pretraining(model, tokens, mask_seed, mask_prob)
                          : detail::prepare_task(model, tokens, label);
  GradientVector g;
  g.kind = kind;
  detail::last_layer_loss_grad(model, sample, flatten_last_layer(model), &g.values);
  if (!g.values.allFinite()) throw DivergenceError("non-finite gradient");
  return g;
}

GradientVector pretrain_last_layer_grad(const ModelState& model, const Document& doc,
                                        std::uint64_t mask_seed, double mask_prob) {
  auto g = last_layer_grad(model, doc.tokens, 0, LossKind::kPretraining, mask_seed,
                           mask_prob);
  g.owner = doc.id;
  return g;
}

GradientVector task_last_layer_grad(const ModelState& model, const TaskExample& example) {
  auto g = last_layer_grad(model, example.tokens, example.label, LossKind::kTask, 0);
  g.owner = example.id;
  return g;
}

Eigen::VectorXd flatten_last_layer(const ModelState& model) {
  const auto d = model.encoder_w.rows();
  const auto h = model.encoder_w.cols();
  Eigen::VectorXd flat(d * h + h);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) flat(i * h + j) = model.encoder_w(i, j);
  }
  flat.tail(h) = model.encoder_b;
  return flat;
}

Eigen::VectorXd flatten_last_layer(const ModelGradient& grad) {
  const auto d = grad.encoder_w.rows();
  const auto h = grad.encoder_w.cols();
  Eigen::VectorXd flat(d * h + h);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) flat(i * h + j) = grad.encoder_w(i, j);
  }
  flat.tail(h) = grad.encoder_b;
  return flat;
}

void set_last_layer(ModelState& model, const Eigen::VectorXd& flat) {
  const auto d = model.encoder_w.rows();
  const auto h = model.encoder_w.cols();
  if (flat.size() != d * h + h) throw ValidationError("last-layer vector length mismatch");
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) model.encoder_w(i, j) = flat(i * h + j);
  }
  model.encoder_b = flat.tail(h);
}

void apply_sgd(ModelState& model, const ModelGradient& grad, double learning_rate) {
  if (!(learning_rate >= 0.0)) throw ValidationError("learning rate must be >= 0");
  for_each_tensor_pair(model, grad, [&](auto& p, const auto& g) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ValidationError("gradient shape mismatch");
    }
    p.noalias() -= learning_rate * g;
    if (p.size() > 0 && !(p.cwiseAbs().maxCoeff() <= kDivergenceBound)) {
      throw DivergenceError("parameter left [-1e6, 1e6] or became non-finite");
    }
  });
}

ModelState sgd_step(const ModelState& model, const ModelGradient& grad,
                    double learning_rate) {
  ModelState next = model;
  apply_sgd(next, grad, learning_rate);
  return next;
}

std::string serialize_model(const ModelState& model) {
  const auto d = model.dims();
  std::ostringstream out;
  out << "iss-checkpoint v1\n"
      << "vocab " << d.vocab << "\nembed " << d.embed << "\nhidden " << d.hidden
      << "\nclasses " << d.classes << "\nseed " << model.seed
      << "\norder embeddings encoder_w encoder_b pretrain_w pretrain_b task_w task_b"
         " (each row-major)\n"
      << "values " << model.param_count() << '\n';
  char buf[48];
  for_each_tensor(model, [&](const auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%a\n", static_cast<double>(t(r, c)));
        out << buf;
      }
    }
  });
  return out.str();
}

ModelState parse_model(std::string_view text) {
  auto lines = io::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  constexpr std::size_t kHeader = 8;
  if (lines.size() < kHeader || lines[0] != "iss-checkpoint v1") {
    throw ValidationError("not an iss checkpoint");
  }
  const auto field = [&](std::size_t i, std::string_view key) -> std::uint64_t {
    const auto parts = io::split(lines[i], ' ');
    if (parts.size() != 2 || parts[0] != key) {
      throw ValidationError("checkpoint header: expected " + std::string(key));
    }
    return std::stoull(parts[1]);
  };
  ModelDims dims{field(1, "vocab"), field(2, "embed"), field(3, "hidden"),
                 field(4, "classes")};
  const std::uint64_t seed = field(5, "seed");
  ModelState m = init_model(dims, seed);
  const std::uint64_t count = field(7, "values");
  if (count != m.param_count() || lines.size() != kHeader + count) {
    throw ValidationError("checkpoint value count mismatch");
  }
  std::size_t next = kHeader;
  for_each_tensor(m, [&](auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        char* end = nullptr;
        const std::string& s = lines[next++];
        t(r, c) = std::strtod(s.c_str(), &end);
        if (end == s.c_str()) throw ValidationError("bad checkpoint value");
      }
    }
  });
  return m;
}

std::string model_checksum(const ModelState& model) {
  return io::checksum_hex(serialize_model(model));
}

}  // namespace iss
