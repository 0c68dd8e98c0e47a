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

#include <cmath>

#include <gtest/gtest.h>

#include "iss/common.hpp"

namespace iss {
namespace {

Document doc(std::string id, std::vector<TokenId> tokens) {
  return Document{std::move(id), "", std::move(tokens)};
}

constexpr TokenId a = 2, b = 3, c = 4;

TEST(Bm25, CountsOnTwoDocuments) {
  const auto idx = Bm25Index::build(std::vector{doc("d1", {a, b}), doc("d2", {a})});
  EXPECT_EQ(idx.num_docs(), 2u);
  EXPECT_EQ(idx.df(a), 2u);
  EXPECT_EQ(idx.df(b), 1u);
  EXPECT_DOUBLE_EQ(idx.avgdl(), 1.5);
}

TEST(Bm25, RepeatedTerm) {
  const auto idx = Bm25Index::build(std::vector{doc("d1", {a, a, a})});
  EXPECT_EQ(idx.tf(a, 0), 3u);
  EXPECT_EQ(idx.doc_length(0), 3u);
  EXPECT_DOUBLE_EQ(idx.avgdl(), 3.0);
}

TEST(Bm25, HandComputedScore) {
  const auto idx = Bm25Index::build(std::vector{doc("d1", {a, b}), doc("d2", {a})});
  const std::vector<TokenId> q = {b};
  EXPECT_NEAR(idx.idf(b), std::log(2.0), 1e-12);
  EXPECT_NEAR(idx.score(q, "d1"), std::log(2.0) * 2.2 / 2.5, 1e-12);
  EXPECT_NEAR(idx.score(q, "d1"), 0.610, 1e-3);
  EXPECT_DOUBLE_EQ(idx.score(q, "d2"), 0.0);
}

TEST(Bm25, DuplicateQueryTermsCountOnce) {
  const auto idx = Bm25Index::build(std::vector{doc("d1", {a, b}), doc("d2", {a})});
  const std::vector<TokenId> once = {b}, twice = {b, b};
  EXPECT_DOUBLE_EQ(idx.score(once, "d1"), idx.score(twice, "d1"));
}

TEST(Bm25, ScoresNonNegative) {
  std::vector<Document> docs;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    std::vector<TokenId> t;
    for (std::size_t j = 0, n = 1 + rng.below(8); j < n; ++j) {
      t.push_back(static_cast<TokenId>(2 + rng.below(6)));
    }
    docs.push_back(doc("d" + std::to_string(i), t));
  }
  const auto idx = Bm25Index::build(docs);
  const std::vector<TokenId> q = {2, 3, 4, 5, 6, 7};
  for (double s : idx.score_all(q)) EXPECT_GE(s, 0.0);
}

TEST(Bm25, SerializeRoundTrip) {
  const auto idx = Bm25Index::build(std::vector{doc("d1", {a, b, c}), doc("d2", {a, a})},
                                    Bm25Params{0.9, 0.4});
  const auto back = Bm25Index::parse(idx.serialize());
  EXPECT_EQ(back.serialize(), idx.serialize());
  const std::vector<TokenId> q = {a, c};
  EXPECT_DOUBLE_EQ(back.score(q, "d1"), idx.score(q, "d1"));
}

TEST(Bm25, Errors) {
  EXPECT_THROW(Bm25Index::build(std::vector<Document>{}), ValidationError);
  EXPECT_THROW(Bm25Index::build(std::vector{doc("d1", {a}), doc("d1", {b})}), ValidationError);
  EXPECT_THROW(Bm25Index::build(std::vector{doc("d1", {a})}, Bm25Params{1.2, 1.5}),
               ValidationError);
}

TEST(Retrieve, PoolIsDeduplicatedUnion) {
  const auto idx = Bm25Index::build(
      std::vector{doc("d1", {a}), doc("d2", {b}), doc("d3", {a, b}), doc("d4", {c})});
  const std::vector<std::vector<TokenId>> queries = {{a}, {b}};
  const auto pool = retrieve_candidates(idx, queries, 2);
  std::vector<std::string> ids;
  for (const auto& p : pool) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::string>{"d1", "d2", "d3"}));
  for (std::size_t i = 1; i < pool.size(); ++i) {
    EXPECT_GE(pool[i - 1].best_score, pool[i].best_score);
  }
  EXPECT_THROW(retrieve_candidates(idx, queries, 0), ValidationError);
}

TEST(Retrieve, WorkersDoNotChangeResult) {
  std::vector<Document> docs;
  Rng rng(9);
  for (int i = 0; i < 60; ++i) {
    std::vector<TokenId> t;
    for (int j = 0; j < 5; ++j) t.push_back(static_cast<TokenId>(2 + rng.below(20)));
    docs.push_back(doc("d" + std::to_string(i), t));
  }
  const auto idx = Bm25Index::build(docs);
  std::vector<std::vector<TokenId>> queries;
  for (int i = 0; i < 8; ++i) queries.push_back(docs[static_cast<std::size_t>(i)].tokens);
  const auto one = retrieve_candidates(idx, queries, 5, 1);
  const auto four = retrieve_candidates(idx, queries, 5, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].id, four[i].id);
}

}  // namespace
}  // namespace iss
