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

#include "iss/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "iss/common.hpp"
#include "iss/io.hpp"

namespace iss {

std::vector<TokenId> query_terms(std::span<const TokenId> query) {
  std::vector<TokenId> terms;
  for (TokenId t : query) {
    if (t >= kReservedIds) terms.push_back(t);
  }
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

Bm25Index Bm25Index::build(std::span<const Document> docs, Bm25Params params) {
  if (docs.empty()) throw ValidationError("cannot index an empty corpus");
  if (!(params.k1 > 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
    throw ValidationError("bm25 requires k1 > 0 and 0 <= b <= 1");
  }
  Bm25Index index;
  index.params_ = params;
  for (const auto& doc : docs) {
    std::map<TokenId, std::uint32_t> counts;
    for (TokenId t : doc.tokens) ++counts[t];
    index.doc_ids_.push_back(doc.id);
    index.doc_len_.push_back(doc.tokens.size());
    index.doc_terms_.emplace_back(counts.begin(), counts.end());
  }
  index.finalize();
  return index;
}

void Bm25Index::finalize() {
  id_to_doc_.clear();
  postings_.clear();
  double total = 0.0;
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    if (!id_to_doc_.emplace(doc_ids_[d], d).second) {
      throw ValidationError("duplicate id " + doc_ids_[d]);
    }
    total += static_cast<double>(doc_len_[d]);
    for (const auto& [term, count] : doc_terms_[d]) {
      postings_[term].emplace_back(static_cast<std::uint32_t>(d), count);
    }
  }
  avgdl_ = total / static_cast<double>(doc_ids_.size());
}

std::size_t Bm25Index::df(TokenId term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

std::size_t Bm25Index::tf(TokenId term, std::size_t doc) const {
  const auto& terms = doc_terms_.at(doc);
  auto it = std::lower_bound(terms.begin(), terms.end(), term,
                             [](const auto& p, TokenId t) { return p.first < t; });
  return (it != terms.end() && it->first == term) ? it->second : 0;
}

std::size_t Bm25Index::doc_index(std::string_view id) const {
  auto it = id_to_doc_.find(std::string(id));
  if (it == id_to_doc_.end()) {
    throw ValidationError("unknown document id " + std::string(id));
  }
  return it->second;
}

double Bm25Index::idf(TokenId term) const {
  const double n = static_cast<double>(num_docs());
  const double f = static_cast<double>(df(term));
  return std::log((n - f + 0.5) / (f + 0.5) + 1.0);
}

double Bm25Index::term_weight(TokenId term, std::uint32_t tf, std::size_t doc) const {
  const double t = static_cast<double>(tf);
  const double norm =
      1.0 - params_.b + params_.b * static_cast<double>(doc_len_[doc]) / avgdl_;
  return idf(term) * t * (params_.k1 + 1.0) / (t + params_.k1 * norm);
}

double Bm25Index::score_at(std::span<const TokenId> query, std::size_t doc) const {
  if (doc >= num_docs()) throw ValidationError("document index out of range");
  double total = 0.0;
  for (TokenId term : query_terms(query)) {
    const auto count = tf(term, doc);
    if (count > 0) total += term_weight(term, static_cast<std::uint32_t>(count), doc);
  }
  return total;
}

double Bm25Index::score(std::span<const TokenId> query, std::string_view doc_id) const {
  return score_at(query, doc_index(doc_id));
}

std::vector<double> Bm25Index::score_all(std::span<const TokenId> query) const {
  std::vector<double> scores(num_docs(), 0.0);
  for (TokenId term : query_terms(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (const auto& [doc, count] : it->second) {
      scores[doc] += term_weight(term, count, doc);
    }
  }
  return scores;
}

std::string Bm25Index::serialize() const {
  std::ostringstream out;
  out << "bm25-index v1\t" << format_double(params_.k1) << '\t'
      << format_double(params_.b) << '\t' << num_docs() << '\n';
  for (std::size_t d = 0; d < num_docs(); ++d) {
    out << doc_ids_[d] << '\t' << doc_len_[d] << '\t';
    for (std::size_t i = 0; i < doc_terms_[d].size(); ++i) {
      if (i) out << ' ';
      out << doc_terms_[d][i].first << ':' << doc_terms_[d][i].second;
    }
    out << '\n';
  }
  return out.str();
}

Bm25Index Bm25Index::parse(std::string_view text) {
  auto lines = io::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ValidationError("empty index file");
  const auto header = io::split(lines[0], '\t');
  if (header.size() != 4 || header[0] != "bm25-index v1") {
    throw ValidationError("not a bm25 index file");
  }
  Bm25Index index;
  index.params_.k1 = std::stod(header[1]);
  index.params_.b = std::stod(header[2]);
  const std::size_t n = std::stoull(header[3]);
  if (lines.size() != n + 1 || n == 0) throw ValidationError("index document count mismatch");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto parts = io::split(lines[i], '\t');
    if (parts.size() != 3) throw ValidationError("malformed index line " + std::to_string(i + 1));
    index.doc_ids_.push_back(parts[0]);
    index.doc_len_.push_back(std::stoull(parts[1]));
    TermCounts terms;
    if (!parts[2].empty()) {
      for (const auto& pair : io::split(parts[2], ' ')) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos) throw ValidationError("malformed term count");
        terms.emplace_back(static_cast<TokenId>(std::stoul(pair.substr(0, colon))),
                           static_cast<std::uint32_t>(std::stoul(pair.substr(colon + 1))));
      }
    }
    index.doc_terms_.push_back(std::move(terms));
  }
  index.finalize();
  return index;
}

std::vector<RetrievedCandidate> retrieve_candidates(
    const Bm25Index& index, std::span<const std::vector<TokenId>> queries,
    std::size_t top_n, std::size_t workers) {
  if (top_n < 1) throw ValidationError("top_n must be >= 1");
  const auto& ids = index.doc_ids();
  std::vector<std::vector<std::pair<std::size_t, double>>> per_query(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t q) {
    const auto scores = index.score_all(queries[q]);
    std::vector<std::pair<std::size_t, double>> hits;
    for (std::size_t d = 0; d < scores.size(); ++d) {
      if (scores[d] > 0.0) hits.emplace_back(d, scores[d]);
    }
    const auto better = [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return ids[a.first] < ids[b.first];
    };
    if (hits.size() > top_n) {
      std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top_n),
                        hits.end(), better);
      hits.resize(top_n);
    } else {
      std::sort(hits.begin(), hits.end(), better);
    }
    per_query[q] = std::move(hits);
  });

  std::vector<double> best(index.num_docs(), 0.0);
  std::vector<bool> present(index.num_docs(), false);
  for (const auto& hits : per_query) {
    for (const auto& [doc, s] : hits) {
      present[doc] = true;
      best[doc] = std::max(best[doc], s);
    }
  }
  std::vector<RetrievedCandidate> out;
  for (std::size_t d = 0; d < present.size(); ++d) {
    if (present[d]) out.push_back({ids[d], best[d]});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.best_score != b.best_score) return a.best_score > b.best_score;
    return a.id < b.id;
  });
  return out;
}

std::vector<RetrievedCandidate> retrieve_candidates(const Bm25Index& index,
                                                    std::span<const TaskExample> queries,
                                                    std::size_t top_n,
                                                    std::size_t workers) {
  std::vector<std::vector<TokenId>> q;
  q.reserve(queries.size());
  for (const auto& ex : queries) q.push_back(ex.tokens);
  return retrieve_candidates(index, q, top_n, workers);
}

}  // namespace iss
