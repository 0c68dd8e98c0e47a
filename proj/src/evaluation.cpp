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

#include "iss/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "iss/common.hpp"

namespace iss {

std::string_view to_string(F1Mode mode) {
  return mode == F1Mode::kMicro ? "micro-F1" : "macro-F1";
}

F1Mode parse_f1_mode(std::string_view name) {
  if (name == "micro" || name == "micro-F1") return F1Mode::kMicro;
  if (name == "macro" || name == "macro-F1") return F1Mode::kMacro;
  throw ValidationError("unknown F1 mode '" + std::string(name) + "'");
}

double compute_f1(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                  F1Mode mode) {
  if (preds.size() != golds.size()) throw ValidationError("prediction/gold length mismatch");
  if (preds.empty()) throw ValidationError("F1 of an empty prediction set");
  std::map<std::size_t, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) {
      ++counts[golds[i]][0];
    } else {
      ++counts[preds[i]][1];
      ++counts[golds[i]][2];
    }
  }
  const auto f1 = [](double tp, double fp, double fn) {
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  };
  if (mode == F1Mode::kMicro) {
    double tp = 0, fp = 0, fn = 0;
    for (const auto& [cls, c] : counts) {
      tp += static_cast<double>(c[0]);
      fp += static_cast<double>(c[1]);
      fn += static_cast<double>(c[2]);
    }
    return f1(tp, fp, fn);
  }
  const std::set<std::size_t> gold_classes(golds.begin(), golds.end());
  double total = 0.0;
  for (std::size_t cls : gold_classes) {
    const auto& c = counts[cls];
    total += f1(static_cast<double>(c[0]), static_cast<double>(c[1]),
                static_cast<double>(c[2]));
  }
  return total / static_cast<double>(gold_classes.size());
}

double flops(double param_count, double tokens) {
  if (param_count < 0.0 || tokens < 0.0) throw ValidationError("flops inputs must be >= 0");
  return 6.0 * tokens * param_count;
}

std::span<const ReferenceCompute> reference_compute_rows() {
  static constexpr std::array<ReferenceCompute, 5> kRows{{
      {"BERT-Base", "109M", "16G", 2.79e19},
      {"RoBERTa-Base", "125M", "160G", 1.54e21},
      {"RoBERTa-Large", "355M", "160G", 4.36e21},
      {"TLM (small)", "109M", "0.91G", 2.74e18},
      {"ISS (small)", "109M", "0.18G", 1.82e18},
  }};
  return kRows;
}

double pmi_from_counts(std::size_t n, std::size_t n_w, std::size_t n_y, std::size_t n_wy) {
  if (n_wy == 0) return -std::numeric_limits<double>::infinity();
  return std::log2((static_cast<double>(n_wy) * static_cast<double>(n)) /
                   (static_cast<double>(n_w) * static_cast<double>(n_y)));
}

double pmi(std::span<const TaskExample> task, TokenId word, std::size_t label) {
  std::size_t n_w = 0, n_y = 0, n_wy = 0;
  for (const auto& ex : task) {
    const bool has_word =
        std::find(ex.tokens.begin(), ex.tokens.end(), word) != ex.tokens.end();
    const bool has_label = ex.label == label;
    n_w += has_word;
    n_y += has_label;
    n_wy += has_word && has_label;
  }
  if (n_w == 0 || n_y == 0) {
    throw ValidationError("pmi needs the word and the label to occur at least once");
  }
  return pmi_from_counts(task.size(), n_w, n_y, n_wy);
}

std::string format_pmi(double value) {
  if (std::isinf(value) && value < 0) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

double relative_frequency(std::span<const Document> docs, TokenId word) {
  std::size_t total = 0;
  std::size_t hits = 0;
  for (const auto& d : docs) {
    total += d.tokens.size();
    hits += static_cast<std::size_t>(std::count(d.tokens.begin(), d.tokens.end(), word));
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

TaskWordTable analyze_task_words(std::span<const TaskExample> task,
                                 std::span<const NamedDocuments> subsets, std::size_t top_m,
                                 std::size_t min_count) {
  TaskWordTable table;
  for (const auto& s : subsets) table.subset_names.push_back(s.name);
  std::map<TokenId, std::size_t> word_examples;
  std::map<std::size_t, std::size_t> label_examples;
  std::map<std::pair<TokenId, std::size_t>, std::size_t> joint;
  for (const auto& ex : task) {
    ++label_examples[ex.label];
    std::set<TokenId> unique;
    for (TokenId t : ex.tokens) {
      if (t >= kReservedIds) unique.insert(t);
    }
    for (TokenId t : unique) {
      ++word_examples[t];
      ++joint[{t, ex.label}];
    }
  }
  for (const auto& [label, n_y] : label_examples) {
    std::vector<std::pair<TokenId, double>> scored;
    for (const auto& [word, n_w] : word_examples) {
      if (n_w < min_count) continue;
      auto it = joint.find({word, label});
      if (it == joint.end()) continue;
      scored.emplace_back(word, pmi_from_counts(task.size(), n_w, n_y, it->second));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (scored.size() > top_m) scored.resize(top_m);
    for (const auto& [word, value] : scored) {
      TaskWordRow row{word, label, value, {}};
      for (const auto& s : subsets) row.frequencies.push_back(relative_frequency(s.docs, word));
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string TaskWordTable::render(const Vocabulary& vocab, const LabelMap& labels) const {
  std::ostringstream out;
  out << "word\tlabel\tpmi";
  for (const auto& name : subset_names) out << '\t' << name << " rel_token_freq_%";
  out << '\n';
  char buf[32];
  for (const auto& row : rows) {
    out << vocab.token_of(row.word) << '\t'
        << (row.label < labels.size() ? labels.name(row.label) : std::to_string(row.label))
        << '\t' << format_pmi(row.pmi);
    for (double f : row.frequencies) {
      std::snprintf(buf, sizeof(buf), "%.4f", 100.0 * f);
      out << '\t' << buf;
    }
    out << '\n';
  }
  return out.str();
}

Subset baseline_select(std::span<const std::string> pool, std::size_t size,
                       BaselineStrategy strategy, std::uint64_t seed) {
  if (size > pool.size()) {
    throw ValidationError("baseline size " + std::to_string(size) + " exceeds pool size " +
                          std::to_string(pool.size()));
  }
  std::vector<std::size_t> chosen;
  if (strategy == BaselineStrategy::kBm25Rank) {
    chosen.resize(size);
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  } else {
    chosen = seeded_permutation(pool.size(), derive_seed(seed, "random-baseline"));
    chosen.resize(size);
    std::sort(chosen.begin(), chosen.end());
  }
  Subset s;
  for (std::size_t i : chosen) {
    s.members.push_back(pool[i]);
    s.best_scores.push_back(0.0);
  }
  return s;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("spearman needs two equal-length samples of size >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

void EvalReport::recompute() {
  if (values.empty()) {
    mean = stddev = 0.0;
    return;
  }
  const double n = static_cast<double>(values.size());
  mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) {
    stddev = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  stddev = std::sqrt(ss / (n - 1.0));
}

PretrainOutcome pretrain(const ModelState& model, std::span<const Document> docs,
                         const TrainConfig& cfg) {
  if (docs.empty()) throw ValidationError("pretraining needs a non-empty subset");
  PretrainOutcome out;
  if (cfg.steps == 0) {
    out.model = model;
    return out;
  }
  auto result = train_pretraining(model, docs, cfg);
  out.model = std::move(result.model);
  out.tokens = result.tokens;
  out.flops = flops(static_cast<double>(model.param_count()), static_cast<double>(out.tokens));
  out.epoch_losses = std::move(result.epoch_losses);
  return out;
}

FinetuneOutcome finetune_evaluate(const ModelState& model,
                                  std::span<const TaskExample> task_train,
                                  std::span<const TaskExample> task_test,
                                  const TrainConfig& cfg, F1Mode mode) {
  std::unordered_set<std::string> train_ids;
  for (const auto& ex : task_train) train_ids.insert(ex.id);
  for (const auto& ex : task_test) {
    if (train_ids.count(ex.id)) {
      throw ValidationError("train and test share example id " + ex.id);
    }
  }
  if (task_test.empty()) throw ValidationError("empty test set");
  auto trained = train_task(model, task_train, cfg);
  FinetuneOutcome out;
  out.model = std::move(trained.model);
  std::vector<std::size_t> golds;
  for (const auto& ex : task_test) {
    out.predictions.push_back(predict(out.model, ex.tokens));
    golds.push_back(ex.label);
  }
  out.f1 = compute_f1(out.predictions, golds, mode);
  out.flops = flops(static_cast<double>(model.param_count()),
                    static_cast<double>(trained.tokens));
  return out;
}

std::string serialize_features(const ModelState& model, std::span<const TaskExample> examples,
                               const LabelMap& labels) {
  std::string out;
  for (const auto& ex : examples) {
    out += ex.id;
    out += '\t';
    out += ex.label < labels.size() ? labels.name(ex.label) : std::to_string(ex.label);
    const Eigen::VectorXd f = encode(model, ex.tokens);
    for (Eigen::Index i = 0; i < f.size(); ++i) out += '\t' + format_double(f(i));
    out += '\n';
  }
  return out;
}

}  // namespace iss
