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

#include "iss/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "iss/common.hpp"
#include "iss/io.hpp"

namespace iss {
namespace {

std::string class_word(std::size_t cls, std::size_t i) {
  return "t" + std::to_string(cls) + "w" + std::to_string(i);
}
std::string domain_word(std::size_t i) { return "dom" + std::to_string(i); }
std::string background_word(std::size_t i) { return "bg" + std::to_string(i); }

std::string label_name(std::size_t cls) {
  static const char* kNames[] = {"world", "sports", "business", "scitech"};
  return cls < 4 ? kNames[cls] : "class" + std::to_string(cls);
}

std::string padded(std::string_view prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return std::string(prefix) + buf;
}

class Builder {
 public:
  Builder(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  void add_class(std::size_t cls, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      words_.push_back(class_word(cls, rng_.below(cfg_.class_words)));
    }
  }
  void add_domain(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) words_.push_back(domain_word(rng_.below(cfg_.domain_words)));
  }
  void add_background(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      words_.push_back(background_word(rng_.below(cfg_.background_words)));
    }
  }
  void add(const std::string& w) { words_.push_back(w); }

  // Shuffled, sentence-cased, with a trailing period.
  std::string finish() {
    rng_.shuffle(words_);
    std::string text;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (i) text += ' ';
      text += words_[i];
    }
    if (!text.empty()) {
      text[0] = static_cast<char>(text[0] - 'a' + 'A');
      text += '.';
    }
    words_.clear();
    return text;
  }

 private:
  const SynthConfig& cfg_;
  Rng& rng_;
  std::vector<std::string> words_;
};

}  // namespace

SynthBenchmark generate_synthetic(const SynthConfig& cfg) {
  if (cfg.classes < 2) throw ValidationError("synthetic benchmark needs >= 2 classes");
  if (cfg.class_words < 1 || cfg.domain_words < 1 || cfg.background_words < 1) {
    throw ValidationError("synthetic word pools must be non-empty");
  }
  Rng rng(derive_seed(cfg.seed, "synthetic"));
  Builder b(cfg, rng);
  SynthBenchmark bench;

  struct Query {
    std::size_t cls;
    std::vector<std::string> topic;
  };
  std::vector<Query> train_queries;

  const auto make_split = [&](std::vector<RawRecord>& out, std::string_view prefix,
                              std::size_t per_class, bool keep_queries) {
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < cfg.classes; ++c) labels.insert(labels.end(), per_class, c);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::size_t cls = labels[i];
      Query q{cls, {}};
      for (std::size_t j = 0; j < cfg.example_class_words; ++j) {
        q.topic.push_back(class_word(cls, rng.below(cfg.class_words)));
      }
      for (const auto& w : q.topic) b.add(w);
      b.add_domain(cfg.example_domain_words);
      b.add_background(cfg.example_background_words);
      out.push_back(RawRecord{padded(prefix, i), b.finish(), label_name(cls), i + 1});
      if (keep_queries) train_queries.push_back(std::move(q));
    }
  };
  make_split(bench.train, "train", cfg.train_per_class, true);
  make_split(bench.valid, "valid", cfg.valid_per_class, false);
  make_split(bench.test, "test", cfg.test_per_class, false);

  enum class Kind { kPlanted, kEcho, kBackground };
  std::vector<std::pair<Kind, std::string>> docs;
  for (std::size_t i = 0; i < cfg.planted; ++i) {
    const std::size_t cls = rng.below(cfg.classes);
    b.add_class(cls, cfg.planted_class_words);
    b.add_domain(cfg.planted_domain_words);
    b.add_background(cfg.planted_background_words);
    docs.emplace_back(Kind::kPlanted, b.finish());
  }
  for (const auto& q : train_queries) {
    for (std::size_t e = 0; e < cfg.echoes_per_query; ++e) {
      const std::size_t other = (q.cls + 1 + rng.below(cfg.classes - 1)) % cfg.classes;
      for (const auto& w : q.topic) b.add(w);
      b.add_class(other, cfg.echo_foreign_words);
      b.add_domain(cfg.example_domain_words);
      b.add_background(2);
      docs.emplace_back(Kind::kEcho, b.finish());
    }
  }
  if (docs.size() > cfg.documents) {
    throw ValidationError("planted and echo documents exceed the corpus size");
  }
  while (docs.size() < cfg.documents) {
    b.add_background(cfg.background_doc_words);
    docs.emplace_back(Kind::kBackground, b.finish());
  }
  rng.shuffle(docs);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::string id = padded("doc", i);
    bench.corpus.push_back(RawRecord{id, docs[i].second, "", i + 1});
    if (docs[i].first == Kind::kPlanted) bench.planted_ids.push_back(id);
    if (docs[i].first == Kind::kEcho) bench.echo_ids.push_back(id);
  }
  return bench;
}

std::string records_to_jsonl(const std::vector<RawRecord>& records, bool with_label) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["text"] = r.text;
    if (with_label) obj["label"] = r.label;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_synthetic(const SynthBenchmark& bench, const std::filesystem::path& dir) {
  io::write_atomic(dir / "corpus.jsonl", records_to_jsonl(bench.corpus, false));
  io::write_atomic(dir / "task_train.jsonl", records_to_jsonl(bench.train, true));
  io::write_atomic(dir / "task_valid.jsonl", records_to_jsonl(bench.valid, true));
  io::write_atomic(dir / "task_test.jsonl", records_to_jsonl(bench.test, true));
  std::string planted;
  for (const auto& id : bench.planted_ids) planted += id + '\n';
  io::write_atomic(dir / "planted.txt", planted);
  std::string echoes;
  for (const auto& id : bench.echo_ids) echoes += id + '\n';
  io::write_atomic(dir / "echoes.txt", echoes);
}

}  // namespace iss
