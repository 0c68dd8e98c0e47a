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

#include "iss/corpus.hpp"

#include <gtest/gtest.h>

#include "iss/common.hpp"

namespace iss {
namespace {

std::vector<RawRecord> docs_of(std::initializer_list<std::string> texts) {
  std::vector<RawRecord> out;
  std::size_t i = 0;
  for (const auto& t : texts) out.push_back(RawRecord{"d" + std::to_string(++i), t, "", i});
  return out;
}

using Tokens = std::vector<std::string>;

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(tokenize("Hello, World!"), (Tokens{"hello", "world"}));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, CollapsesWhitespace) {
  EXPECT_EQ(tokenize("a  b\tc"), (Tokens{"a", "b", "c"}));
}

TEST(Tokenize, KeepsInnerPunctuation) {
  EXPECT_EQ(tokenize("(don't) e-mail..."), (Tokens{"don't", "e-mail"}));
  EXPECT_TRUE(tokenize("!!! ...").empty());
}

TEST(Vocabulary, ThresholdDropsRareTokens) {
  const auto v = build_vocabulary(docs_of({"a a a b"}), {}, 2);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id_of("[UNK]"), kUnkId);
  EXPECT_EQ(v.id_of("[MASK]"), kMaskId);
  EXPECT_EQ(v.id_of("a"), 2u);
  EXPECT_FALSE(v.find("b").has_value());
}

TEST(Vocabulary, FrequencyTiesBreakLexicographically) {
  const auto v = build_vocabulary(docs_of({"b a", "a b"}), {}, 2);
  EXPECT_EQ(v.id_of("a"), 2u);
  EXPECT_EQ(v.id_of("b"), 3u);
}

TEST(Vocabulary, HigherFrequencyGetsLowerId) {
  const auto v = build_vocabulary(docs_of({"z z z a"}), {}, 1);
  EXPECT_EQ(v.id_of("z"), 2u);
  EXPECT_EQ(v.id_of("a"), 3u);
}

TEST(Vocabulary, MinFreqOne) {
  EXPECT_EQ(build_vocabulary(docs_of({"x y x"}), {}, 1).size(), 4u);
}

TEST(Vocabulary, Errors) {
  EXPECT_THROW(build_vocabulary(docs_of({"a"}), {}, 0), ValidationError);
  try {
    build_vocabulary(docs_of({"!!!"}), {}, 1);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "no tokens");
  }
}

TEST(Vocabulary, SeparateTaskThreshold) {
  std::vector<RawRecord> task = {{"t1", "rare", "x", 1}};
  const auto v = build_vocabulary(docs_of({"a a"}), task, VocabularyOptions{2, 1});
  EXPECT_TRUE(v.find("rare").has_value());
  EXPECT_TRUE(v.find("a").has_value());
}

TEST(Vocabulary, RoundTrip) {
  const auto v = build_vocabulary(docs_of({"c b a c b c"}), {}, 1);
  EXPECT_EQ(Vocabulary::parse(v.serialize()), v);
  EXPECT_THROW(Vocabulary::parse("a\nb\n"), ValidationError);
}

TEST(Ingest, UnknownTokensMapToUnk) {
  const auto v = Vocabulary::from_tokens({"a"});
  const auto recs = parse_records(R"({"id":"d1","text":"a b"})", RecordKind::kCorpus);
  const auto got = make_documents(recs, v);
  ASSERT_EQ(got.items.size(), 1u);
  EXPECT_EQ(got.items[0].id, "d1");
  EXPECT_EQ(got.items[0].tokens, (std::vector<TokenId>{2, 0}));
}

TEST(Ingest, DuplicateIdNamed) {
  const auto v = Vocabulary::from_tokens({"a"});
  const auto recs = parse_records("{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"a\"}\n",
                                  RecordKind::kCorpus);
  try {
    make_documents(recs, v);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "duplicate id d1");
  }
}

TEST(Ingest, EmptyDocumentsSkipped) {
  const auto v = Vocabulary::from_tokens({"a"});
  const auto recs = parse_records("{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d2\",\"text\":\"!!!\"}\n",
                                  RecordKind::kCorpus);
  const auto got = make_documents(recs, v);
  EXPECT_EQ(got.items.size(), 1u);
  EXPECT_EQ(got.skipped, 1u);
}

TEST(Ingest, MalformedLineReportsLineNumber) {
  const std::string text = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d2\"\n";
  try {
    parse_records(text, RecordKind::kCorpus);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_records(R"({"id":"t1","text":"a"})", RecordKind::kTask), ValidationError);
  EXPECT_THROW(parse_records(R"({"id":1,"text":"a"})", RecordKind::kCorpus), ValidationError);
}

TEST(Ingest, TaskLabels) {
  const auto v = Vocabulary::from_tokens({"a", "b"});
  const auto recs = parse_records(
      "{\"id\":\"t1\",\"text\":\"a\",\"label\":\"pos\"}\n"
      "{\"id\":\"t2\",\"text\":\"b\",\"label\":\"neg\"}\n",
      RecordKind::kTask);
  LabelMap labels;
  const auto got = make_task_examples(recs, v, labels, true);
  ASSERT_EQ(got.items.size(), 2u);
  EXPECT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels.name(got.items[0].label), "pos");
  EXPECT_EQ(LabelMap::parse(labels.serialize()).names(), labels.names());

  LabelMap frozen(std::vector<std::string>{"pos"});
  EXPECT_THROW(make_task_examples(recs, v, frozen, false), ValidationError);
}

TEST(Ingest, IdsStayBelowVocabSizeAndRoundTrip) {
  const auto recs = docs_of({"the cat sat", "the mat", "a dog ran far"});
  const auto v = build_vocabulary(recs, {}, 2);
  const auto docs = make_documents(recs, v).items;
  for (const auto& d : docs) {
    for (TokenId t : d.tokens) EXPECT_LT(t, v.size());
  }
  const auto back = parse_documents(serialize_documents(docs));
  ASSERT_EQ(back.size(), docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(back[i].id, docs[i].id);
    EXPECT_EQ(back[i].tokens, docs[i].tokens);
  }
}

TEST(Ingest, Deterministic) {
  const std::string bytes = "{\"id\":\"d1\",\"text\":\"x y x\"}\n{\"id\":\"d2\",\"text\":\"y z\"}\n";
  const auto a = parse_records(bytes, RecordKind::kCorpus);
  const auto b = parse_records(bytes, RecordKind::kCorpus);
  const auto va = build_vocabulary(a, {}, 1);
  EXPECT_EQ(va, build_vocabulary(b, {}, 1));
  EXPECT_EQ(serialize_documents(make_documents(a, va).items),
            serialize_documents(make_documents(b, va).items));
}

}  // namespace
}  // namespace iss
