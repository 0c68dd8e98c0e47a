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
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "iss/corpus.hpp"

namespace iss {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Okapi BM25 statistics over a fixed document collection. Immutable after
// build; all queries are const and thread-safe.
//
//   score(q, d) = sum_{t in unique(q)} idf(t) * tf(t,d) * (k1 + 1)
//                 / (tf(t,d) + k1 * (1 - b + b * dl(d) / avgdl))
//   idf(t)      = ln((N - df(t) + 0.5) / (df(t) + 0.5) + 1)
//
// Reserved ids (UNK, MASK) are ignored as query terms.
class Bm25Index {
 public:
  using TermCounts = std::vector<std::pair<TokenId, std::uint32_t>>;

  static Bm25Index build(std::span<const Document> docs, Bm25Params params = {});

  std::size_t num_docs() const { return doc_ids_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }

  std::size_t df(TokenId term) const;
  std::size_t tf(TokenId term, std::size_t doc) const;
  std::size_t doc_length(std::size_t doc) const { return doc_len_.at(doc); }
  std::size_t doc_index(std::string_view id) const;
  double idf(TokenId term) const;

  double score(std::span<const TokenId> query, std::string_view doc_id) const;
  double score_at(std::span<const TokenId> query, std::size_t doc) const;
  // Scores of every document, in index order.
  std::vector<double> score_all(std::span<const TokenId> query) const;

  std::string serialize() const;
  static Bm25Index parse(std::string_view text);

 private:
  void finalize();
  double term_weight(TokenId term, std::uint32_t tf, std::size_t doc) const;

  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> doc_len_;
  std::vector<TermCounts> doc_terms_;
  std::unordered_map<std::string, std::size_t> id_to_doc_;
  std::unordered_map<TokenId, std::vector<std::pair<std::uint32_t, std::uint32_t>>>
      postings_;
  double avgdl_ = 0.0;
};

// Sorted unique non-reserved terms of a query.
std::vector<TokenId> query_terms(std::span<const TokenId> query);

struct RetrievedCandidate {
  std::string id;
  double best_score = 0.0;
};

// Per query, keeps the top_n positive-score documents (score descending, id
// ascending); returns their union ordered by best score across queries
// descending, then id ascending.
std::vector<RetrievedCandidate> retrieve_candidates(
    const Bm25Index& index, std::span<const std::vector<TokenId>> queries,
    std::size_t top_n, std::size_t workers = 1);

std::vector<RetrievedCandidate> retrieve_candidates(
    const Bm25Index& index, std::span<const TaskExample> queries, std::size_t top_n,
    std::size_t workers = 1);

}  // namespace iss
