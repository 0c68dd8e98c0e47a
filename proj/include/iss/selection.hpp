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
#include <utility>
#include <vector>

#include "iss/corpus.hpp"
#include "iss/influence.hpp"
#include "iss/model.hpp"

namespace iss {

struct SelectionConfig {
  std::size_t k = 1;                 // top candidates per anchor (or anchor batch)
  std::size_t batch_candidates = 1;  // B_p
  std::size_t batch_anchors = 1;     // B_t
  bool use_minibatch = false;
  bool shuffle_batches = false;      // seeded shuffle before batching (ablation)
  double learning_rate = 0.1;        // eta; scales scores, never membership
  std::uint64_t seed = 0;
  double mask_prob = kDefaultMaskProb;
  std::size_t max_size = 0;          // truncate S to this many members; 0 = no limit
  bool fill = false;                 // grow k until |S| reaches max_size
  std::size_t workers = 1;

  void validate() const;
  // Canonical "key=value;" rendering and its FNV-1a hex digest.
  std::string canonical() const;
  std::string hash() const;
};

struct AnchorPicks {
  std::string anchor;
  std::vector<std::pair<std::string, double>> picks;  // rank order
};

// Members are unique and ordered by best score descending, then id.
struct Subset {
  std::vector<std::string> members;
  std::vector<double> best_scores;
  std::vector<AnchorPicks> provenance;
  std::size_t dot_products = 0;
  std::size_t k = 0;  // per-anchor depth actually used
};

// Last-layer l_p gradient of every candidate and l_t gradient of every
// anchor, each computed once.
struct GradientTable {
  std::vector<GradientVector> candidates;
  std::vector<GradientVector> anchors;
};

GradientTable compute_gradients(const ModelState& model, std::span<const Document> candidates,
                                std::span<const TaskExample> anchors,
                                const SelectionConfig& cfg);

// Full cross product of influence scores, sorted by candidate id then anchor id.
std::vector<InfluenceRecord> score_candidates(const ModelState& model,
                                              std::span<const Document> candidates,
                                              std::span<const TaskExample> anchors,
                                              const SelectionConfig& cfg);
std::vector<InfluenceRecord> score_gradients(const GradientTable& table, double lr);

// Per anchor (in anchor id order): the k best candidates, score descending
// and id ascending on ties. S is their deduplicated union.
Subset select_topk(std::span<const InfluenceRecord> records, std::size_t k,
                   std::size_t max_size = 0);

// Smallest k' >= cfg.k whose union holds at least max_size members (or every
// candidate), truncated to max_size. Falls back to cfg.k when max_size is 0.
Subset select_filled(std::span<const InfluenceRecord> records, const SelectionConfig& cfg);
Subset minibatch_select_filled(const GradientTable& table, const SelectionConfig& cfg);

// Contiguous batches of B_p candidates and B_t anchors, batch gradient = mean
// of members; per anchor batch the k best candidate batches contribute all
// their members. Candidate batches tie-break on their smallest member id.
Subset minibatch_select(const ModelState& model, std::span<const Document> candidates,
                        std::span<const TaskExample> anchors, const SelectionConfig& cfg);
Subset minibatch_select(const GradientTable& table, const SelectionConfig& cfg);

std::size_t minibatch_dot_products(std::size_t candidates, std::size_t anchors,
                                   std::size_t batch_candidates, std::size_t batch_anchors);

// One member id per line.
std::string serialize_members(const Subset& subset);
// anchor_id \t rank \t candidate_id \t score, rank starting at 1.
std::string serialize_provenance(const Subset& subset);
// candidate_id \t anchor_id \t score
std::string serialize_scores(std::span<const InfluenceRecord> records);
std::vector<InfluenceRecord> parse_scores(std::string_view text);

}  // namespace iss
