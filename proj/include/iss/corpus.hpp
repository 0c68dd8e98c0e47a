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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iss {

using TokenId = std::uint32_t;

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kMaskId = 1;
inline constexpr std::size_t kReservedIds = 2;

// Unlabeled candidate document.
struct Document {
  std::string id;
  std::string text;
  std::vector<TokenId> tokens;
};

// Labeled end-task example; label indexes the task's LabelMap.
struct TaskExample {
  std::string id;
  std::string text;
  std::vector<TokenId> tokens;
  std::size_t label = 0;
};

using Documents = std::vector<Document>;
using TaskExamples = std::vector<TaskExample>;

// One parsed JSONL line before tokenization. `label` is empty for corpus
// records.
struct RawRecord {
  std::string id;
  std::string text;
  std::string label;
  std::size_t line = 0;
};

// Lowercases ASCII letters, splits on Unicode whitespace, strips leading and
// trailing ASCII punctuation from every piece and drops empty pieces.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr std::string_view kUnkToken = "[UNK]";
  static constexpr std::string_view kMaskToken = "[MASK]";

  // Only the reserved ids.
  Vocabulary();

  // `tokens` lists surface tokens for ids 2, 3, ... in order.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return id_to_token_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id_of(std::string_view token) const;
  const std::string& token_of(TokenId id) const;

  std::vector<TokenId> encode(std::string_view text) const;

  // One token per line, ids implied by line order (reserved ids included).
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

struct VocabularyOptions {
  std::size_t doc_min_freq = 2;
  std::size_t task_min_freq = 1;
};

// Keeps a token when its pooled count is >= doc_min_freq or its task count is
// >= task_min_freq. Ids follow descending pooled frequency, ties broken by
// byte-wise lexicographic order.
Vocabulary build_vocabulary(std::span<const RawRecord> docs,
                            std::span<const RawRecord> task,
                            const VocabularyOptions& options);

Vocabulary build_vocabulary(std::span<const RawRecord> docs,
                            std::span<const RawRecord> task,
                            std::size_t min_freq);

// Category names in first-seen order.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t intern(std::string_view name);

  // "index\tname" per line.
  std::string serialize() const;
  static LabelMap parse(std::string_view text);

 private:
  std::vector<std::string> names_;
};

enum class RecordKind { kCorpus, kTask };

// Parses a JSONL file. Corpus lines have exactly "id" and "text"; task lines
// have exactly "id", "text" and "label", all strings.
std::vector<RawRecord> read_records(const std::filesystem::path& path,
                                    RecordKind kind);
std::vector<RawRecord> parse_records(std::string_view jsonl, RecordKind kind);

template <typename T>
struct Ingested {
  std::vector<T> items;
  std::size_t skipped = 0;
};

// Unknown tokens map to UNK; records that tokenize to nothing are skipped and
// counted. Duplicate ids are an error.
Ingested<Document> make_documents(std::span<const RawRecord> records,
                                  const Vocabulary& vocab);
Ingested<Document> ingest_corpus(const std::filesystem::path& path,
                                 const Vocabulary& vocab);

// Labels not yet in `labels` are appended when `extend_labels` is set and
// rejected otherwise.
Ingested<TaskExample> make_task_examples(std::span<const RawRecord> records,
                                         const Vocabulary& vocab,
                                         LabelMap& labels, bool extend_labels);
Ingested<TaskExample> ingest_task(const std::filesystem::path& path,
                                  const Vocabulary& vocab, LabelMap& labels,
                                  bool extend_labels);

// Tokenized on-disk form used between pipeline stages:
//   id \t label-index-or-dash \t space-separated token ids
std::string serialize_documents(std::span<const Document> docs);
Documents parse_documents(std::string_view text);
std::string serialize_task(std::span<const TaskExample> examples);
TaskExamples parse_task(std::string_view text);

// Task examples viewed as unlabeled documents (for the pretraining loss).
Documents as_documents(std::span<const TaskExample> examples);

}  // namespace iss
