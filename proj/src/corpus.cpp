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

#include <algorithm>
#include <charconv>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "iss/common.hpp"
#include "iss/io.hpp"

namespace iss {
namespace {

bool is_ascii_space(unsigned char ch) {
  return ch == ' ' || (ch >= 0x09 && ch <= 0x0d);
}

// Length in bytes of a UTF-8 encoded Unicode whitespace character starting
// at text[pos], or 0.
std::size_t unicode_space_length(std::string_view text, std::size_t pos) {
  const auto at = [&](std::size_t i) -> unsigned char {
    return i < text.size() ? static_cast<unsigned char>(text[i]) : 0;
  };
  const unsigned char b0 = at(pos);
  if (is_ascii_space(b0)) return 1;
  if (b0 == 0xc2 && (at(pos + 1) == 0x85 || at(pos + 1) == 0xa0)) return 2;
  if (b0 == 0xe1 && at(pos + 1) == 0x9a && at(pos + 2) == 0x80) return 3;
  if (b0 == 0xe2 && at(pos + 1) == 0x80) {
    const unsigned char b2 = at(pos + 2);
    if ((b2 >= 0x80 && b2 <= 0x8a) || b2 == 0xa8 || b2 == 0xa9 || b2 == 0xaf) {
      return 3;
    }
  }
  if (b0 == 0xe2 && at(pos + 1) == 0x81 && at(pos + 2) == 0x9f) return 3;
  if (b0 == 0xe3 && at(pos + 1) == 0x80 && at(pos + 2) == 0x80) return 3;
  return 0;
}

bool is_ascii_punct(unsigned char ch) {
  return (ch >= 0x21 && ch <= 0x2f) || (ch >= 0x3a && ch <= 0x40) ||
         (ch >= 0x5b && ch <= 0x60) || (ch >= 0x7b && ch <= 0x7e);
}

void emit_piece(std::string_view piece, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = piece.size();
  while (begin < end && is_ascii_punct(static_cast<unsigned char>(piece[begin]))) {
    ++begin;
  }
  while (end > begin && is_ascii_punct(static_cast<unsigned char>(piece[end - 1]))) {
    --end;
  }
  if (begin == end) return;
  std::string token(piece.substr(begin, end - begin));
  for (char& ch : token) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  out.push_back(std::move(token));
}

std::map<std::string, std::size_t> count_tokens(std::span<const RawRecord> records) {
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : records) {
    for (auto& tok : tokenize(rec.text)) ++counts[std::move(tok)];
  }
  return counts;
}

std::vector<TokenId> parse_ids(std::string_view text) {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    TokenId value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
    if (ec != std::errc()) throw ValidationError("bad token id list");
    pos = static_cast<std::size_t>(ptr - text.data());
    ids.push_back(value);
  }
  return ids;
}

std::string join_ids(const std::vector<TokenId>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::size_t start = 0;
  while (pos < text.size()) {
    const std::size_t space = unicode_space_length(text, pos);
    if (space > 0) {
      emit_piece(text.substr(start, pos - start), out);
      pos += space;
      start = pos;
    } else {
      ++pos;
    }
  }
  emit_piece(text.substr(start), out);
  return out;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {std::string(kUnkToken), std::string(kMaskToken)};
  token_to_id_.emplace(kUnkToken, kUnkId);
  token_to_id_.emplace(kMaskToken, kMaskId);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  for (auto& tok : tokens) {
    if (vocab.token_to_id_.count(tok)) {
      throw ValidationError("duplicate vocabulary token " + tok);
    }
    const auto id = static_cast<TokenId>(vocab.id_to_token_.size());
    vocab.token_to_id_.emplace(tok, id);
    vocab.id_to_token_.push_back(std::move(tok));
  }
  return vocab;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_of(std::string_view token) const {
  return find(token).value_or(kUnkId);
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id >= id_to_token_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& tok : tokenize(text)) ids.push_back(id_of(tok));
  return ids;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& tok : id_to_token_) {
    out += tok;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  auto lines = io::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < kReservedIds || lines[0] != kUnkToken || lines[1] != kMaskToken) {
    throw ValidationError("vocabulary file must start with reserved tokens");
  }
  lines.erase(lines.begin(), lines.begin() + kReservedIds);
  return from_tokens(std::move(lines));
}

Vocabulary build_vocabulary(std::span<const RawRecord> docs,
                            std::span<const RawRecord> task,
                            const VocabularyOptions& options) {
  if (options.doc_min_freq < 1 || options.task_min_freq < 1) {
    throw ValidationError("min_freq must be >= 1");
  }
  const auto doc_counts = count_tokens(docs);
  const auto task_counts = count_tokens(task);
  std::map<std::string, std::size_t> pooled = doc_counts;
  for (const auto& [tok, n] : task_counts) pooled[tok] += n;
  if (pooled.empty()) throw ValidationError("no tokens");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : pooled) {
    const auto t = task_counts.find(tok);
    const std::size_t in_task = t == task_counts.end() ? 0 : t->second;
    if (n >= options.doc_min_freq || in_task >= options.task_min_freq) {
      kept.emplace_back(tok, n);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary::from_tokens(std::move(tokens));
}

Vocabulary build_vocabulary(std::span<const RawRecord> docs,
                            std::span<const RawRecord> task,
                            std::size_t min_freq) {
  return build_vocabulary(docs, task, VocabularyOptions{min_freq, min_freq});
}

LabelMap::LabelMap(std::vector<std::string> names) {
  for (auto& n : names) intern(n);
}

std::optional<std::size_t> LabelMap::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t LabelMap::intern(std::string_view name) {
  if (auto idx = find(name)) return *idx;
  names_.emplace_back(name);
  return names_.size() - 1;
}

std::string LabelMap::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out += std::to_string(i) + '\t' + names_[i] + '\n';
  }
  return out;
}

LabelMap LabelMap::parse(std::string_view text) {
  LabelMap map;
  for (const auto& line : io::split(text, '\n')) {
    if (line.empty()) continue;
    const auto parts = io::split(line, '\t');
    if (parts.size() != 2 || parts[0] != std::to_string(map.size())) {
      throw ValidationError("malformed label map line: " + line);
    }
    map.intern(parts[1]);
  }
  return map;
}

std::vector<RawRecord> parse_records(std::string_view jsonl, RecordKind kind) {
  std::vector<RawRecord> records;
  auto lines = io::split(jsonl, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  const std::size_t expected_fields = kind == RecordKind::kTask ? 3 : 2;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto fail = [&](const std::string& why) {
      throw ValidationError("malformed record at line " + std::to_string(line_no) +
                            ": " + why);
    };
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
    if (!obj.is_object() || obj.size() != expected_fields) {
      fail(kind == RecordKind::kTask ? "expected fields id, text, label"
                                     : "expected fields id, text");
    }
    RawRecord rec;
    rec.line = line_no;
    const auto get = [&](const char* key, std::string& out) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) {
        fail(std::string("field '") + key + "' missing or not a string");
      }
      out = it->get<std::string>();
    };
    get("id", rec.id);
    get("text", rec.text);
    if (kind == RecordKind::kTask) get("label", rec.label);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RawRecord> read_records(const std::filesystem::path& path,
                                    RecordKind kind) {
  return parse_records(io::read_file(path), kind);
}

Ingested<Document> make_documents(std::span<const RawRecord> records,
                                  const Vocabulary& vocab) {
  Ingested<Document> result;
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    if (!seen.insert(rec.id).second) throw ValidationError("duplicate id " + rec.id);
    auto tokens = vocab.encode(rec.text);
    if (tokens.empty()) {
      ++result.skipped;
      continue;
    }
    result.items.push_back(Document{rec.id, rec.text, std::move(tokens)});
  }
  return result;
}

Ingested<Document> ingest_corpus(const std::filesystem::path& path,
                                 const Vocabulary& vocab) {
  const auto records = read_records(path, RecordKind::kCorpus);
  return make_documents(records, vocab);
}

Ingested<TaskExample> make_task_examples(std::span<const RawRecord> records,
                                         const Vocabulary& vocab,
                                         LabelMap& labels, bool extend_labels) {
  Ingested<TaskExample> result;
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    if (!seen.insert(rec.id).second) throw ValidationError("duplicate id " + rec.id);
    std::size_t label = 0;
    if (extend_labels) {
      label = labels.intern(rec.label);
    } else if (auto found = labels.find(rec.label)) {
      label = *found;
    } else {
      throw ValidationError("unknown label '" + rec.label + "' at line " +
                            std::to_string(rec.line));
    }
    auto tokens = vocab.encode(rec.text);
    if (tokens.empty()) {
      ++result.skipped;
      continue;
    }
    result.items.push_back(TaskExample{rec.id, rec.text, std::move(tokens), label});
  }
  return result;
}

Ingested<TaskExample> ingest_task(const std::filesystem::path& path,
                                  const Vocabulary& vocab, LabelMap& labels,
                                  bool extend_labels) {
  const auto records = read_records(path, RecordKind::kTask);
  return make_task_examples(records, vocab, labels, extend_labels);
}

std::string serialize_documents(std::span<const Document> docs) {
  std::string out;
  for (const auto& d : docs) out += d.id + "\t-\t" + join_ids(d.tokens) + '\n';
  return out;
}

Documents parse_documents(std::string_view text) {
  Documents docs;
  for (const auto& line : io::split(text, '\n')) {
    if (line.empty()) continue;
    const auto parts = io::split(line, '\t');
    if (parts.size() != 3) throw ValidationError("malformed tokenized line: " + line);
    docs.push_back(Document{parts[0], "", parse_ids(parts[2])});
  }
  return docs;
}

std::string serialize_task(std::span<const TaskExample> examples) {
  std::string out;
  for (const auto& e : examples) {
    out += e.id + '\t' + std::to_string(e.label) + '\t' + join_ids(e.tokens) + '\n';
  }
  return out;
}

TaskExamples parse_task(std::string_view text) {
  TaskExamples out;
  for (const auto& line : io::split(text, '\n')) {
    if (line.empty()) continue;
    const auto parts = io::split(line, '\t');
    if (parts.size() != 3) throw ValidationError("malformed tokenized line: " + line);
    TaskExample ex;
    ex.id = parts[0];
    ex.label = static_cast<std::size_t>(std::stoull(parts[1]));
    ex.tokens = parse_ids(parts[2]);
    out.push_back(std::move(ex));
  }
  return out;
}

Documents as_documents(std::span<const TaskExample> examples) {
  Documents docs;
  docs.reserve(examples.size());
  for (const auto& e : examples) docs.push_back(Document{e.id, e.text, e.tokens});
  return docs;
}

}  // namespace iss
