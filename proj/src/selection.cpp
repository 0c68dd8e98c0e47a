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

#include "iss/selection.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "iss/common.hpp"
#include "iss/io.hpp"

namespace iss {
namespace {

Subset union_of(std::vector<AnchorPicks> provenance, std::size_t max_size) {
  std::unordered_map<std::string, double> best;
  for (const auto& a : provenance) {
    for (const auto& [id, score] : a.picks) {
      auto [it, inserted] = best.emplace(id, score);
      if (!inserted) it->second = std::max(it->second, score);
    }
  }
  std::vector<std::pair<std::string, double>> ordered(best.begin(), best.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_size > 0 && ordered.size() > max_size) ordered.resize(max_size);
  Subset s;
  for (auto& [id, score] : ordered) {
    s.members.push_back(id);
    s.best_scores.push_back(score);
  }
  s.provenance = std::move(provenance);
  return s;
}

Eigen::VectorXd mean_of(const std::vector<GradientVector>& grads,
                        const std::vector<std::size_t>& members) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(grads.at(members.front()).values.size());
  for (std::size_t i : members) sum += grads[i].values;
  return sum / static_cast<double>(members.size());
}

std::vector<std::vector<std::size_t>> contiguous_batches(std::size_t n, std::size_t size,
                                                         const std::vector<std::size_t>& order) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += size) {
    const std::size_t end = std::min(n, start + size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

void SelectionConfig::validate() const {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (batch_candidates < 1 || batch_anchors < 1) {
    throw ValidationError("mini-batch sizes must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
}

std::string SelectionConfig::canonical() const {
  std::ostringstream out;
  out << "k=" << k << ";batch_candidates=" << batch_candidates
      << ";batch_anchors=" << batch_anchors << ";use_minibatch=" << use_minibatch
      << ";shuffle_batches=" << shuffle_batches
      << ";learning_rate=" << format_double(learning_rate) << ";seed=" << seed
      << ";mask_prob=" << format_double(mask_prob) << ";max_size=" << max_size
      << ";fill=" << fill << ';';
  return out.str();
}

std::string SelectionConfig::hash() const { return io::checksum_hex(canonical()); }

GradientTable compute_gradients(const ModelState& model, std::span<const Document> candidates,
                                std::span<const TaskExample> anchors,
                                const SelectionConfig& cfg) {
  GradientTable table;
  table.candidates.resize(candidates.size());
  table.anchors.resize(anchors.size());
  parallel_for(candidates.size(), cfg.workers, [&](std::size_t i) {
    const auto& doc = candidates[i];
    table.candidates[i] = pretrain_last_layer_grad(
        model, doc, scoring_mask_seed(cfg.seed, doc.id), cfg.mask_prob);
  });
  parallel_for(anchors.size(), cfg.workers, [&](std::size_t i) {
    table.anchors[i] = task_last_layer_grad(model, anchors[i]);
  });
  return table;
}

std::vector<InfluenceRecord> score_gradients(const GradientTable& table, double lr) {
  const std::size_t na = table.anchors.size();
  std::vector<InfluenceRecord> records(table.candidates.size() * na);
  for (std::size_t c = 0; c < table.candidates.size(); ++c) {
    for (std::size_t a = 0; a < na; ++a) {
      records[c * na + a] = InfluenceRecord{
          table.candidates[c].owner, table.anchors[a].owner,
          influence_score(table.candidates[c], table.anchors[a], lr)};
    }
  }
  std::sort(records.begin(), records.end(), [](const auto& x, const auto& y) {
    if (x.candidate != y.candidate) return x.candidate < y.candidate;
    return x.anchor < y.anchor;
  });
  return records;
}

std::vector<InfluenceRecord> score_candidates(const ModelState& model,
                                              std::span<const Document> candidates,
                                              std::span<const TaskExample> anchors,
                                              const SelectionConfig& cfg) {
  cfg.validate();
  return score_gradients(compute_gradients(model, candidates, anchors, cfg),
                         cfg.learning_rate);
}

Subset select_topk(std::span<const InfluenceRecord> records, std::size_t k,
                   std::size_t max_size) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::map<std::string, std::vector<std::pair<std::string, double>>> by_anchor;
  for (const auto& r : records) by_anchor[r.anchor].emplace_back(r.candidate, r.score);
  std::size_t expected = 0;
  std::vector<AnchorPicks> provenance;
  for (auto& [anchor, list] : by_anchor) {
    if (expected == 0) expected = list.size();
    if (list.size() != expected) {
      throw ValidationError("influence records do not cover a full cross product");
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (list.size() > k) list.resize(k);
    provenance.push_back(AnchorPicks{anchor, std::move(list)});
  }
  Subset s = union_of(std::move(provenance), max_size);
  s.dot_products = records.size();
  s.k = k;
  return s;
}

std::size_t minibatch_dot_products(std::size_t candidates, std::size_t anchors,
                                   std::size_t batch_candidates, std::size_t batch_anchors) {
  const auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  return ceil_div(candidates, batch_candidates) * ceil_div(anchors, batch_anchors);
}

Subset minibatch_select(const GradientTable& table, const SelectionConfig& cfg) {
  cfg.validate();
  const std::size_t nc = table.candidates.size();
  const std::size_t na = table.anchors.size();
  if (nc == 0 || na == 0) return Subset{};
  std::vector<std::size_t> cand_order(nc);
  std::vector<std::size_t> anchor_order(na);
  for (std::size_t i = 0; i < nc; ++i) cand_order[i] = i;
  for (std::size_t i = 0; i < na; ++i) anchor_order[i] = i;
  if (cfg.shuffle_batches) {
    cand_order = seeded_permutation(nc, derive_seed(cfg.seed, "candidate-batches"));
    anchor_order = seeded_permutation(na, derive_seed(cfg.seed, "anchor-batches"));
  }
  const auto cand_batches = contiguous_batches(nc, cfg.batch_candidates, cand_order);
  const auto anchor_batches = contiguous_batches(na, cfg.batch_anchors, anchor_order);

  std::vector<Eigen::VectorXd> cand_means;
  std::vector<std::string> cand_keys;  // smallest member id
  for (const auto& b : cand_batches) {
    cand_means.push_back(mean_of(table.candidates, b));
    std::string key = table.candidates[b.front()].owner;
    for (std::size_t i : b) key = std::min(key, table.candidates[i].owner);
    cand_keys.push_back(std::move(key));
  }

  std::vector<AnchorPicks> provenance;
  for (std::size_t ab = 0; ab < anchor_batches.size(); ++ab) {
    const auto& members = anchor_batches[ab];
    const Eigen::VectorXd g_t = mean_of(table.anchors, members);
    std::vector<std::pair<std::size_t, double>> scored;
    for (std::size_t cb = 0; cb < cand_batches.size(); ++cb) {
      scored.emplace_back(cb, influence_score(cand_means[cb], g_t, cfg.learning_rate));
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return cand_keys[a.first] < cand_keys[b.first];
    });
    if (scored.size() > cfg.k) scored.resize(cfg.k);
    AnchorPicks picks;
    picks.anchor = members.size() == 1 ? table.anchors[members.front()].owner
                                       : "anchor-batch-" + std::to_string(ab);
    for (const auto& [cb, score] : scored) {
      std::vector<std::string> ids;
      for (std::size_t i : cand_batches[cb]) ids.push_back(table.candidates[i].owner);
      std::sort(ids.begin(), ids.end());
      for (auto& id : ids) picks.picks.emplace_back(std::move(id), score);
    }
    provenance.push_back(std::move(picks));
  }
  if (cfg.batch_anchors == 1) {
    std::sort(provenance.begin(), provenance.end(),
              [](const auto& a, const auto& b) { return a.anchor < b.anchor; });
  }
  Subset s = union_of(std::move(provenance), cfg.max_size);
  s.dot_products = cand_batches.size() * anchor_batches.size();
  s.k = cfg.k;
  return s;
}

Subset minibatch_select(const ModelState& model, std::span<const Document> candidates,
                        std::span<const TaskExample> anchors, const SelectionConfig& cfg) {
  return minibatch_select(compute_gradients(model, candidates, anchors, cfg), cfg);
}

Subset select_filled(std::span<const InfluenceRecord> records, const SelectionConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::size_t> per_anchor;
  for (const auto& r : records) ++per_anchor[r.anchor];
  const std::size_t limit = per_anchor.empty() ? cfg.k : per_anchor.begin()->second;
  std::size_t k = cfg.k;
  Subset s = select_topk(records, k, cfg.max_size);
  while (cfg.fill && cfg.max_size > 0 && s.members.size() < cfg.max_size && k < limit) {
    s = select_topk(records, ++k, cfg.max_size);
  }
  s.k = k;
  return s;
}

Subset minibatch_select_filled(const GradientTable& table, const SelectionConfig& cfg) {
  const std::size_t limit =
      (table.candidates.size() + cfg.batch_candidates - 1) / cfg.batch_candidates;
  SelectionConfig c = cfg;
  Subset s = minibatch_select(table, c);
  while (cfg.fill && cfg.max_size > 0 && s.members.size() < cfg.max_size && c.k < limit) {
    ++c.k;
    s = minibatch_select(table, c);
  }
  s.k = c.k;
  return s;
}

std::string serialize_members(const Subset& subset) {
  std::string out;
  for (const auto& id : subset.members) out += id + '\n';
  return out;
}

std::string serialize_provenance(const Subset& subset) {
  std::string out;
  for (const auto& a : subset.provenance) {
    for (std::size_t r = 0; r < a.picks.size(); ++r) {
      out += a.anchor + '\t' + std::to_string(r + 1) + '\t' + a.picks[r].first + '\t' +
             format_double(a.picks[r].second) + '\n';
    }
  }
  return out;
}

std::string serialize_scores(std::span<const InfluenceRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.candidate + '\t' + r.anchor + '\t' + format_double(r.score) + '\n';
  }
  return out;
}

std::vector<InfluenceRecord> parse_scores(std::string_view text) {
  std::vector<InfluenceRecord> out;
  for (const auto& line : io::split(text, '\n')) {
    if (line.empty()) continue;
    const auto parts = io::split(line, '\t');
    if (parts.size() != 3) throw ValidationError("malformed score line: " + line);
    out.push_back(InfluenceRecord{parts[0], parts[1], std::stod(parts[2])});
  }
  return out;
}

}  // namespace iss
