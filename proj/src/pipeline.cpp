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

#include "iss/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "json.hpp"

#include "iss/common.hpp"
#include "iss/corpus.hpp"
#include "iss/evaluation.hpp"
#include "iss/influence.hpp"
#include "iss/io.hpp"
#include "iss/model.hpp"
#include "iss/retrieval.hpp"
#include "iss/selection.hpp"
#include "iss/synthetic.hpp"
#include "iss/training.hpp"

#ifndef ISS_VERSION
#define ISS_VERSION "0.0.0"
#endif

namespace iss {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr ConfigKey kSchema[] = {
    {"data.corpus", "corpus.jsonl", "corpus JSONL, one {\"id\",\"text\"} object per line"},
    {"data.train", "task_train.jsonl", "task training JSONL; also the retrieval queries"},
    {"data.valid", "task_valid.jsonl", "held-out task JSONL, used as selection anchors"},
    {"data.test", "task_test.jsonl", "task test JSONL"},
    {"vocab.doc_min_freq", "2", "keep a token seen this often across corpus and task"},
    {"vocab.task_min_freq", "1", "keep a token seen this often in the task texts"},
    {"bm25.k1", "1.2", "BM25 term saturation"},
    {"bm25.b", "0.75", "BM25 length normalisation"},
    {"retrieve.top_n", "50", "documents kept per training query"},
    {"model.embed", "16", "embedding width d"},
    {"model.hidden", "8", "encoder width h"},
    {"model.mask_prob", "0.15", "masked-token fraction for l_p"},
    {"warmup.learning_rate", "1", "warm-up SGD step; also eta for influence scores"},
    {"warmup.epochs", "800", "warm-up passes over the task training texts"},
    {"warmup.batch_size", "8", "warm-up mini-batch size"},
    {"warmup.task_weight", "0.2", "weight of l_t in the warm-up objective"},
    {"warmup.resample_masks", "true", "new masks every warm-up epoch"},
    {"select.anchors", "valid", "anchor set: valid or train"},
    {"select.k", "80", "top candidates kept per anchor"},
    {"select.batch_candidates", "1", "candidate batch size B_p"},
    {"select.batch_anchors", "1", "anchor batch size B_t"},
    {"select.shuffle_batches", "false", "seeded shuffle before batching"},
    {"select.max_size", "500", "truncate the subset to this many documents; 0 keeps all"},
    {"select.fill", "true", "raise k until the subset reaches select.max_size"},
    {"pretrain.subset", "iss", "documents to pretrain on: iss, bm25, random or none"},
    {"pretrain.learning_rate", "3", "pretraining SGD step"},
    {"pretrain.steps", "4000", "pretraining mini-batch steps"},
    {"pretrain.batch_size", "8", "pretraining mini-batch size"},
    {"pretrain.resample_masks", "true", "new masks every pretraining epoch"},
    {"finetune.init", "pretrained", "start from the pretrain checkpoint or a fresh model"},
    {"finetune.learning_rate", "0.5", "fine-tuning SGD step"},
    {"finetune.epochs", "100", "fine-tuning passes"},
    {"finetune.batch_size", "1", "fine-tuning mini-batch size"},
    {"eval.metric", "macro", "macro or micro F1"},
    {"eval.subsets", "iss,bm25,random,none", "subsets compared by evaluate"},
    {"eval.seeds", "", "comma-separated root seeds for evaluate; empty uses --seed"},
    {"analyze.top_m", "10", "task words listed per label"},
    {"analyze.min_count", "2", "minimum training examples containing a listed word"},
    {"synth.classes", "4", "gen-synth: number of labels"},
    {"synth.documents", "5000", "gen-synth: corpus size"},
    {"synth.planted", "500", "gen-synth: planted in-domain documents"},
    {"synth.echoes_per_query", "5", "gen-synth: lexical distractors per training query"},
    {"synth.background_words", "1800", "gen-synth: background vocabulary size"},
    {"synth.train_per_class", "10", "gen-synth: training examples per label"},
    {"synth.valid_per_class", "16", "gen-synth: anchor examples per label"},
    {"synth.test_per_class", "50", "gen-synth: test examples per label"},
};

constexpr std::string_view kStages[] = {"ingest", "index",    "retrieve", "warmup",
                                        "score",  "select",   "pretrain", "finetune",
                                        "evaluate", "analyze"};

// Stages whose outputs a stage reads.
const std::map<std::string_view, std::vector<std::string_view>>& upstream() {
  static const std::map<std::string_view, std::vector<std::string_view>> m = {
      {"ingest", {}},
      {"index", {"ingest"}},
      {"retrieve", {"index"}},
      {"warmup", {"ingest"}},
      {"score", {"warmup", "retrieve"}},
      {"select", {"score"}},
      {"pretrain", {"select"}},
      {"finetune", {"pretrain"}},
      {"evaluate", {"select"}},
      {"analyze", {"select"}},
      {"gen-synth", {}},
  };
  return m;
}

namespace art {
constexpr std::string_view kVocab = "vocab.txt";
constexpr std::string_view kLabels = "labels.tsv";
constexpr std::string_view kCorpus = "corpus.tok";
constexpr std::string_view kTrain = "train.tok";
constexpr std::string_view kValid = "valid.tok";
constexpr std::string_view kTest = "test.tok";
constexpr std::string_view kIndex = "bm25.index";
constexpr std::string_view kPool = "pool.txt";
constexpr std::string_view kWarm = "warm.ckpt";
constexpr std::string_view kScores = "scores.tsv";
constexpr std::string_view kSubset = "subset.txt";
constexpr std::string_view kProvenance = "provenance.tsv";
constexpr std::string_view kBm25Subset = "baseline_bm25.txt";
constexpr std::string_view kRandomSubset = "baseline_random.txt";
constexpr std::string_view kPretrained = "pretrained.ckpt";
constexpr std::string_view kFinetuned = "finetuned.ckpt";
constexpr std::string_view kFeatures = "features.tsv";
constexpr std::string_view kPredictions = "predictions.tsv";
constexpr std::string_view kReportText = "report.txt";
constexpr std::string_view kReportTable = "report.tsv";
constexpr std::string_view kAnalysis = "analysis.txt";
}  // namespace art

struct Context {
  Config cfg;
  fs::path base;
  fs::path out;
  std::uint64_t root = 0;
  std::size_t workers = 1;

  fs::path data(std::string_view key) const {
    fs::path p = cfg.get(key);
    return p.is_absolute() ? p : base / p;
  }
  fs::path artifact(std::string_view name) const { return out / name; }
};

class StageRun {
 public:
  StageRun(const Context& ctx, std::string stage)
      : ctx_(ctx), start_(std::chrono::steady_clock::now()) {
    m_.stage = std::move(stage);
    m_.config_hash = ctx.cfg.hash();
    m_.root_seed = ctx.root;
    m_.workers = ctx.workers;
  }

  const Context& ctx() const { return ctx_; }
  StageManifest& manifest() { return m_; }

  // Checks every input before any work starts.
  void require(std::initializer_list<fs::path> paths) const {
    for (const auto& p : paths) io::require_exists(p);
  }

  std::string read(const fs::path& path) {
    std::string data = io::read_file(path);
    m_.inputs.push_back(FileRecord{path.lexically_normal().string(), io::checksum_hex(data)});
    return data;
  }
  std::string read_artifact(std::string_view name) { return read(ctx_.artifact(name)); }

  std::uint64_t seed(std::string_view label) {
    const std::uint64_t s = stage_seed(ctx_.root, label);
    m_.seeds[std::string(label)] = s;
    return s;
  }

  void output(std::string_view name, std::string contents) {
    pending_.emplace_back(std::string(name), std::move(contents));
  }
  void detail(std::string key, std::string value) { m_.details[std::move(key)] = std::move(value); }
  void detail(std::string key, double value) { detail(std::move(key), format_double(value)); }
  void detail(std::string key, std::size_t value) {
    detail(std::move(key), std::to_string(value));
  }

  // Writes the outputs (each via a temporary name), then the manifest.
  StageManifest commit() {
    for (const auto& [name, contents] : pending_) {
      io::write_atomic(ctx_.artifact(name), contents);
      m_.outputs.push_back(FileRecord{name, io::checksum_hex(contents)});
    }
    m_.cumulative_flops = m_.flops + upstream_flops();
    m_.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_atomic(ctx_.artifact(m_.stage + ".manifest.json"),
                     manifest_json(m_, ctx_.cfg));
    return m_;
  }

 private:
  double upstream_flops() const {
    std::set<std::string_view> seen;
    std::vector<std::string_view> todo;
    const auto& up = upstream();
    if (auto it = up.find(m_.stage); it != up.end()) todo = it->second;
    double total = 0.0;
    while (!todo.empty()) {
      const auto s = todo.back();
      todo.pop_back();
      if (!seen.insert(s).second) continue;
      const fs::path p = ctx_.artifact(std::string(s) + ".manifest.json");
      if (fs::exists(p)) {
        const auto j = Json::parse(io::read_file(p), nullptr, false);
        if (j.is_object() && j.contains("flops") && j["flops"].is_number()) {
          total += j["flops"].get<double>();
        }
      }
      if (auto it = up.find(s); it != up.end()) {
        todo.insert(todo.end(), it->second.begin(), it->second.end());
      }
    }
    return total;
  }

  const Context& ctx_;
  std::chrono::steady_clock::time_point start_;
  StageManifest m_;
  std::vector<std::pair<std::string, std::string>> pending_;
};

std::string join_lines(std::span<const std::string> ids) {
  std::string out;
  for (const auto& id : ids) out += id + '\n';
  return out;
}

std::vector<std::string> parse_lines(std::string_view text) {
  std::vector<std::string> out;
  for (auto& line : io::split(text, '\n')) {
    if (!line.empty()) out.push_back(std::move(line));
  }
  return out;
}

std::vector<RawRecord> read_jsonl(StageRun& run, const fs::path& path, RecordKind kind) {
  const std::string data = run.read(path);
  try {
    return parse_records(data, kind);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ModelDims dims_of(const Context& ctx, std::size_t vocab, std::size_t classes) {
  return ModelDims{vocab, ctx.cfg.get_size("model.embed"), ctx.cfg.get_size("model.hidden"),
                   classes};
}

ModelDims load_dims(StageRun& run) {
  const auto vocab = Vocabulary::parse(run.read_artifact(art::kVocab));
  const auto labels = LabelMap::parse(run.read_artifact(art::kLabels));
  return dims_of(run.ctx(), vocab.size(), labels.size());
}

TrainConfig warmup_config(const Config& c, std::uint64_t seed) {
  TrainConfig t;
  t.learning_rate = c.get_double("warmup.learning_rate");
  t.epochs = c.get_size("warmup.epochs");
  t.batch_size = c.get_size("warmup.batch_size");
  t.task_weight = c.get_double("warmup.task_weight");
  t.resample_masks = c.get_bool("warmup.resample_masks");
  t.mask_prob = c.get_double("model.mask_prob");
  t.seed = seed;
  t.validate();
  return t;
}

TrainConfig pretrain_config(const Config& c, std::uint64_t seed) {
  TrainConfig t;
  t.learning_rate = c.get_double("pretrain.learning_rate");
  t.steps = c.get_size("pretrain.steps");
  t.batch_size = c.get_size("pretrain.batch_size");
  t.resample_masks = c.get_bool("pretrain.resample_masks");
  t.mask_prob = c.get_double("model.mask_prob");
  t.seed = seed;
  t.validate();
  return t;
}

TrainConfig finetune_config(const Config& c, std::uint64_t seed) {
  TrainConfig t;
  t.learning_rate = c.get_double("finetune.learning_rate");
  t.epochs = c.get_size("finetune.epochs");
  t.batch_size = c.get_size("finetune.batch_size");
  t.mask_prob = c.get_double("model.mask_prob");
  t.seed = seed;
  t.validate();
  return t;
}

SelectionConfig selection_config(const Context& ctx, std::uint64_t seed) {
  const auto& c = ctx.cfg;
  SelectionConfig s;
  s.k = c.get_size("select.k");
  s.batch_candidates = c.get_size("select.batch_candidates");
  s.batch_anchors = c.get_size("select.batch_anchors");
  s.shuffle_batches = c.get_bool("select.shuffle_batches");
  s.use_minibatch = s.batch_candidates > 1 || s.batch_anchors > 1 || s.shuffle_batches;
  s.learning_rate = c.get_double("warmup.learning_rate");
  s.mask_prob = c.get_double("model.mask_prob");
  s.max_size = c.get_size("select.max_size");
  s.fill = c.get_bool("select.fill");
  s.seed = seed;
  s.workers = ctx.workers;
  s.validate();
  return s;
}

std::string_view anchor_artifact(const Config& c) {
  const auto& a = c.get("select.anchors");
  if (a == "valid") return art::kValid;
  if (a == "train") return art::kTrain;
  throw ValidationError("select.anchors must be valid or train, got " + a);
}

// Pool documents in pool order.
Documents gather(std::span<const Document> docs, std::span<const std::string> ids,
                 std::string_view what) {
  std::unordered_map<std::string_view, std::size_t> at;
  for (std::size_t i = 0; i < docs.size(); ++i) at.emplace(docs[i].id, i);
  Documents out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = at.find(id);
    if (it == at.end()) {
      throw ValidationError(std::string(what) + " id " + id + " is not in the corpus");
    }
    out.push_back(docs[it->second]);
  }
  return out;
}

std::string_view subset_artifact(std::string_view name) {
  if (name == "iss") return art::kSubset;
  if (name == "bm25") return art::kBm25Subset;
  if (name == "random") return art::kRandomSubset;
  throw ValidationError("unknown subset '" + std::string(name) +
                        "' (expected iss, bm25, random or none)");
}

// ---- stages ---------------------------------------------------------------

void stage_ingest(StageRun& run) {
  const auto& ctx = run.ctx();
  const fs::path corpus = ctx.data("data.corpus");
  const fs::path train = ctx.data("data.train");
  const fs::path valid = ctx.data("data.valid");
  const fs::path test = ctx.data("data.test");
  run.require({corpus, train, valid, test});
  const auto corpus_raw = read_jsonl(run, corpus, RecordKind::kCorpus);
  const auto train_raw = read_jsonl(run, train, RecordKind::kTask);
  const auto valid_raw = read_jsonl(run, valid, RecordKind::kTask);
  const auto test_raw = read_jsonl(run, test, RecordKind::kTask);

  std::vector<RawRecord> task_raw = train_raw;
  task_raw.insert(task_raw.end(), valid_raw.begin(), valid_raw.end());
  VocabularyOptions vo;
  vo.doc_min_freq = ctx.cfg.get_size("vocab.doc_min_freq");
  vo.task_min_freq = ctx.cfg.get_size("vocab.task_min_freq");
  const auto vocab = build_vocabulary(corpus_raw, task_raw, vo);

  LabelMap labels;
  const auto docs = make_documents(corpus_raw, vocab);
  const auto tr = make_task_examples(train_raw, vocab, labels, true);
  const auto va = make_task_examples(valid_raw, vocab, labels, false);
  const auto te = make_task_examples(test_raw, vocab, labels, false);

  run.output(art::kVocab, vocab.serialize());
  run.output(art::kLabels, labels.serialize());
  run.output(art::kCorpus, serialize_documents(docs.items));
  run.output(art::kTrain, serialize_task(tr.items));
  run.output(art::kValid, serialize_task(va.items));
  run.output(art::kTest, serialize_task(te.items));
  run.detail("vocab_size", vocab.size());
  run.detail("labels", labels.size());
  run.detail("documents", docs.items.size());
  run.detail("documents_skipped", docs.skipped);
  run.detail("train_examples", tr.items.size());
  run.detail("valid_examples", va.items.size());
  run.detail("test_examples", te.items.size());
  run.detail("task_skipped", tr.skipped + va.skipped + te.skipped);
}

void stage_index(StageRun& run) {
  const auto& ctx = run.ctx();
  run.require({ctx.artifact(art::kCorpus)});
  const auto docs = parse_documents(run.read_artifact(art::kCorpus));
  Bm25Params p{ctx.cfg.get_double("bm25.k1"), ctx.cfg.get_double("bm25.b")};
  const auto index = Bm25Index::build(docs, p);
  run.output(art::kIndex, index.serialize());
  run.detail("documents", index.num_docs());
  run.detail("avgdl", index.avgdl());
}

void stage_retrieve(StageRun& run) {
  const auto& ctx = run.ctx();
  run.require({ctx.artifact(art::kIndex), ctx.artifact(art::kTrain)});
  const auto index = Bm25Index::parse(run.read_artifact(art::kIndex));
  const auto queries = parse_task(run.read_artifact(art::kTrain));
  const std::size_t top_n = ctx.cfg.get_size("retrieve.top_n");
  if (top_n == 0) throw ValidationError("retrieve.top_n must be >= 1");
  const auto pool = retrieve_candidates(index, queries, top_n, ctx.workers);
  std::string text;
  for (const auto& c : pool) text += c.id + '\n';
  run.output(art::kPool, std::move(text));
  run.detail("k1", index.params().k1);
  run.detail("b", index.params().b);
  run.detail("top_n", top_n);
  run.detail("queries", queries.size());
  run.detail("pool_size", pool.size());
}

void stage_warmup(StageRun& run) {
  const auto& ctx = run.ctx();
  run.require({ctx.artifact(art::kVocab), ctx.artifact(art::kLabels), ctx.artifact(art::kTrain)});
  const ModelDims dims = load_dims(run);
  const auto train = parse_task(run.read_artifact(art::kTrain));
  const auto start = init_model(dims, run.seed("init"));
  const auto cfg = warmup_config(ctx.cfg, run.seed("warmup"));
  const double before = warmup_objective(start, train, cfg);
  auto result = warmup_train(start, train, cfg);
  const double after = warmup_objective(result.model, train, cfg);
  run.manifest().flops = flops(static_cast<double>(start.param_count()),
                               static_cast<double>(result.tokens));
  run.output(art::kWarm, serialize_model(result.model));
  run.detail("objective_before", before);
  run.detail("objective_after", after);
  run.detail("steps", result.steps);
  run.detail("params", start.param_count());
  run.detail("model_checksum", model_checksum(result.model));
}

struct ScoringInputs {
  ModelState model;
  std::vector<std::string> pool;
  Documents candidates;
  TaskExamples anchors;
};

ScoringInputs load_scoring_inputs(StageRun& run) {
  const auto& ctx = run.ctx();
  const auto anchors_name = anchor_artifact(ctx.cfg);
  run.require({ctx.artifact(art::kWarm), ctx.artifact(art::kPool), ctx.artifact(art::kCorpus),
               ctx.artifact(anchors_name)});
  ScoringInputs in;
  in.model = parse_model(run.read_artifact(art::kWarm));
  in.pool = parse_lines(run.read_artifact(art::kPool));
  const auto docs = parse_documents(run.read_artifact(art::kCorpus));
  in.candidates = gather(docs, in.pool, "pool");
  in.anchors = parse_task(run.read_artifact(anchors_name));
  if (in.candidates.empty()) throw ValidationError("empty candidate pool");
  if (in.anchors.empty()) throw ValidationError("empty anchor set");
  return in;
}

void stage_score(StageRun& run) {
  const auto in = load_scoring_inputs(run);
  const auto sel = selection_config(run.ctx(), run.seed("score"));
  const auto records = score_candidates(in.model, in.candidates, in.anchors, sel);
  run.output(art::kScores, serialize_scores(records));
  run.detail("eta", sel.learning_rate);
  run.detail("mask_seed_root", std::to_string(sel.seed));
  run.detail("model_checksum", model_checksum(in.model));
  run.detail("candidates", in.candidates.size());
  run.detail("anchors", in.anchors.size());
  run.detail("dot_products", records.size());
}

void stage_select(StageRun& run) {
  const auto& ctx = run.ctx();
  const auto sel = selection_config(ctx, run.seed("score"));
  Subset s;
  std::vector<std::string> pool;
  if (!sel.use_minibatch) {
    run.require({ctx.artifact(art::kScores), ctx.artifact(art::kPool), ctx.artifact(art::kCorpus)});
    const auto records = parse_scores(run.read_artifact(art::kScores));
    pool = parse_lines(run.read_artifact(art::kPool));
    s = select_filled(records, sel);
  } else {
    const auto in = load_scoring_inputs(run);
    pool = in.pool;
    s = minibatch_select_filled(compute_gradients(in.model, in.candidates, in.anchors, sel), sel);
  }
  const auto docs = parse_documents(run.read_artifact(art::kCorpus));
  std::vector<std::string> corpus_ids;
  corpus_ids.reserve(docs.size());
  for (const auto& d : docs) corpus_ids.push_back(d.id);
  const std::size_t n = s.members.size();
  if (n == 0) throw ValidationError("selection produced an empty subset");
  const auto bm25 = baseline_select(pool, std::min(n, pool.size()), BaselineStrategy::kBm25Rank);
  const auto random = baseline_select(corpus_ids, std::min(n, corpus_ids.size()),
                                      BaselineStrategy::kRandom, run.seed("baseline"));

  run.output(art::kSubset, serialize_members(s));
  run.output(art::kProvenance, serialize_provenance(s));
  run.output(art::kBm25Subset, serialize_members(bm25));
  run.output(art::kRandomSubset, serialize_members(random));
  run.detail("selection_config", sel.canonical());
  run.detail("selection_hash", sel.hash());
  run.detail("pool_size", pool.size());
  run.detail("subset_size", n);
  run.detail("k_used", s.k);
  run.detail("dot_products", s.dot_products);
}

Documents load_subset_docs(StageRun& run, std::span<const Document> corpus,
                           std::string_view name) {
  const auto ids = parse_lines(run.read_artifact(subset_artifact(name)));
  return gather(corpus, ids, "subset");
}

void stage_pretrain(StageRun& run) {
  const auto& ctx = run.ctx();
  const auto& which = ctx.cfg.get("pretrain.subset");
  const bool none = which == "none";
  if (!none) run.require({ctx.artifact(subset_artifact(which))});
  run.require({ctx.artifact(art::kVocab), ctx.artifact(art::kLabels), ctx.artifact(art::kCorpus)});
  const ModelDims dims = load_dims(run);
  auto model = init_model(dims, run.seed("pretrain-init"));
  const auto cfg = pretrain_config(ctx.cfg, run.seed("pretrain"));
  run.detail("subset", which);
  if (!none) {
    const auto corpus = parse_documents(run.read_artifact(art::kCorpus));
    const auto docs = load_subset_docs(run, corpus, which);
    auto outcome = pretrain(model, docs, cfg);
    model = std::move(outcome.model);
    run.manifest().flops = outcome.flops;
    run.detail("subset_size", docs.size());
    run.detail("tokens", outcome.tokens);
    if (!outcome.epoch_losses.empty()) {
      run.detail("loss_first_epoch", outcome.epoch_losses.front());
      run.detail("loss_last_epoch", outcome.epoch_losses.back());
    }
  }
  run.output(art::kPretrained, serialize_model(model));
  run.detail("model_checksum", model_checksum(model));
}

void stage_finetune(StageRun& run) {
  const auto& ctx = run.ctx();
  const auto& init = ctx.cfg.get("finetune.init");
  if (init != "pretrained" && init != "fresh") {
    throw ValidationError("finetune.init must be pretrained or fresh, got " + init);
  }
  if (init == "pretrained") run.require({ctx.artifact(art::kPretrained)});
  run.require({ctx.artifact(art::kVocab), ctx.artifact(art::kLabels), ctx.artifact(art::kTrain),
               ctx.artifact(art::kTest)});
  const ModelDims dims = load_dims(run);
  const auto labels = LabelMap::parse(run.read_artifact(art::kLabels));
  const ModelState start = init == "pretrained"
                               ? parse_model(run.read_artifact(art::kPretrained))
                               : init_model(dims, run.seed("pretrain-init"));
  if (!(start.dims() == dims)) {
    throw ValidationError("checkpoint dimensions do not match the vocabulary and config");
  }
  const auto train = parse_task(run.read_artifact(art::kTrain));
  const auto test = parse_task(run.read_artifact(art::kTest));
  const auto mode = parse_f1_mode(ctx.cfg.get("eval.metric"));
  const auto outcome =
      finetune_evaluate(start, train, test, finetune_config(ctx.cfg, run.seed("finetune")), mode);
  std::string preds;
  for (std::size_t i = 0; i < test.size(); ++i) {
    preds += test[i].id + '\t' + labels.name(test[i].label) + '\t' +
             labels.name(outcome.predictions[i]) + '\n';
  }
  run.manifest().flops = outcome.flops;
  run.output(art::kFinetuned, serialize_model(outcome.model));
  run.output(art::kFeatures, serialize_features(outcome.model, test, labels));
  run.output(art::kPredictions, std::move(preds));
  run.detail("metric", std::string(to_string(mode)));
  run.detail("f1", outcome.f1);
  run.detail("model_checksum", model_checksum(outcome.model));
}

std::vector<std::uint64_t> eval_seeds(const Context& ctx) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : ctx.cfg.get_list("eval.seeds")) {
    Config one;
    one.set("seed", s);
    seeds.push_back(one.get_u64("seed"));
  }
  if (seeds.empty()) seeds.push_back(ctx.root);
  return seeds;
}

void stage_evaluate(StageRun& run) {
  const auto& ctx = run.ctx();
  const auto names = ctx.cfg.get_list("eval.subsets");
  if (names.empty()) throw ValidationError("eval.subsets is empty");
  for (const auto& n : names) {
    if (n != "none") run.require({ctx.artifact(subset_artifact(n))});
  }
  run.require({ctx.artifact(art::kVocab), ctx.artifact(art::kLabels), ctx.artifact(art::kCorpus),
               ctx.artifact(art::kTrain), ctx.artifact(art::kTest)});
  const ModelDims dims = load_dims(run);
  const auto corpus = parse_documents(run.read_artifact(art::kCorpus));
  const auto train = parse_task(run.read_artifact(art::kTrain));
  const auto test = parse_task(run.read_artifact(art::kTest));
  const auto mode = parse_f1_mode(ctx.cfg.get("eval.metric"));
  const auto seeds = eval_seeds(ctx);

  std::vector<Documents> subset_docs;
  for (const auto& n : names) {
    subset_docs.push_back(n == "none" ? Documents{} : load_subset_docs(run, corpus, n));
  }

  struct Cell {
    double f1 = 0.0;
    double pretrain_flops = 0.0;
    double finetune_flops = 0.0;
  };
  std::vector<Cell> cells(names.size() * seeds.size());
  parallel_for(cells.size(), ctx.workers, [&](std::size_t job) {
    const std::size_t si = job / seeds.size();
    const std::uint64_t seed = seeds[job % seeds.size()];
    ModelState model = init_model(dims, stage_seed(seed, "pretrain-init"));
    Cell cell;
    if (names[si] != "none") {
      auto pre = pretrain(model, subset_docs[si], pretrain_config(ctx.cfg, stage_seed(seed, "pretrain")));
      model = std::move(pre.model);
      cell.pretrain_flops = pre.flops;
    }
    const auto ft = finetune_evaluate(model, train, test,
                                      finetune_config(ctx.cfg, stage_seed(seed, "finetune")), mode);
    cell.f1 = ft.f1;
    cell.finetune_flops = ft.flops;
    cells[job] = cell;
  });

  const std::string metric = mode == F1Mode::kMicro ? "f1_micro" : "f1_macro";
  std::string table = "subset\tseed\tmetric\tvalue\n";
  std::string text = "# evaluation report\n";
  text += "metric = " + std::string(to_string(mode)) + "\n";
  text += "test_examples = " + std::to_string(test.size()) + "\n";
  double total = 0.0;
  for (std::size_t si = 0; si < names.size(); ++si) {
    EvalReport rep;
    rep.metric = std::string(to_string(mode));
    rep.subset = names[si];
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const auto& c = cells[si * seeds.size() + k];
      const std::string seed = std::to_string(seeds[k]);
      table += names[si] + '\t' + seed + '\t' + metric + '\t' + format_double(c.f1) + '\n';
      table += names[si] + '\t' + seed + "\tpretrain_flops\t" + format_double(c.pretrain_flops) +
               '\n';
      rep.seeds.push_back(seeds[k]);
      rep.values.push_back(c.f1);
      rep.flops += c.pretrain_flops;
      total += c.pretrain_flops + c.finetune_flops;
    }
    rep.recompute();
    text += "\n[" + rep.subset + "]\n";
    text += "documents = " + std::to_string(subset_docs[si].size()) + "\n";
    text += "seeds =";
    for (auto s : rep.seeds) text += " " + std::to_string(s);
    text += "\nvalues =";
    for (double v : rep.values) text += " " + format_double(v);
    text += "\nmean = " + format_double(rep.mean) + "\n";
    text += "stddev = " + format_double(rep.stddev) + "\n";
    text += "pretrain_flops = " + format_double(rep.flops) + "\n";
  }
  // Published large-scale budgets, for scale.
  text += "\n[reference_compute]\n";
  char buf[160];
  for (const auto& r : reference_compute_rows()) {
    std::snprintf(buf, sizeof(buf), "%-14s params %-5s data %-6s flops %.2E\n",
                  std::string(r.model).c_str(), std::string(r.params).c_str(),
                  std::string(r.data).c_str(), r.flops);
    text += buf;
  }
  run.manifest().flops = total;
  run.output(art::kReportTable, std::move(table));
  run.output(art::kReportText, std::move(text));
  run.detail("subsets", std::to_string(names.size()));
  run.detail("seeds", std::to_string(seeds.size()));
}

void stage_analyze(StageRun& run) {
  const auto& ctx = run.ctx();
  run.require({ctx.artifact(art::kVocab), ctx.artifact(art::kLabels), ctx.artifact(art::kCorpus),
               ctx.artifact(art::kTrain), ctx.artifact(art::kSubset),
               ctx.artifact(art::kBm25Subset), ctx.artifact(art::kRandomSubset)});
  const auto vocab = Vocabulary::parse(run.read_artifact(art::kVocab));
  const auto labels = LabelMap::parse(run.read_artifact(art::kLabels));
  const auto corpus = parse_documents(run.read_artifact(art::kCorpus));
  const auto train = parse_task(run.read_artifact(art::kTrain));
  std::vector<NamedDocuments> named;
  for (std::string_view n : {"iss", "bm25", "random"}) {
    named.push_back(NamedDocuments{std::string(n), load_subset_docs(run, corpus, n)});
  }
  named.push_back(NamedDocuments{"corpus", corpus});
  const auto table = analyze_task_words(train, named, ctx.cfg.get_size("analyze.top_m"),
                                        ctx.cfg.get_size("analyze.min_count"));
  run.output(art::kAnalysis, table.render(vocab, labels));
  run.detail("rows", table.rows.size());
}

void stage_gen_synth(StageRun& run) {
  const auto& c = run.ctx().cfg;
  SynthConfig sc;
  sc.classes = c.get_size("synth.classes");
  sc.documents = c.get_size("synth.documents");
  sc.planted = c.get_size("synth.planted");
  sc.echoes_per_query = c.get_size("synth.echoes_per_query");
  sc.background_words = c.get_size("synth.background_words");
  sc.train_per_class = c.get_size("synth.train_per_class");
  sc.valid_per_class = c.get_size("synth.valid_per_class");
  sc.test_per_class = c.get_size("synth.test_per_class");
  sc.seed = run.seed("synth");
  const auto bench = generate_synthetic(sc);
  run.output("corpus.jsonl", records_to_jsonl(bench.corpus, false));
  run.output("task_train.jsonl", records_to_jsonl(bench.train, true));
  run.output("task_valid.jsonl", records_to_jsonl(bench.valid, true));
  run.output("task_test.jsonl", records_to_jsonl(bench.test, true));
  run.output("planted.txt", join_lines(bench.planted_ids));
  run.output("echoes.txt", join_lines(bench.echo_ids));
  Config conf = c;
  conf.set("data.corpus", "corpus.jsonl");
  conf.set("data.train", "task_train.jsonl");
  conf.set("data.valid", "task_valid.jsonl");
  conf.set("data.test", "task_test.jsonl");
  run.output("iss.conf", "# generated by iss gen-synth\n" + conf.canonical());
  run.detail("documents", bench.corpus.size());
  run.detail("planted", bench.planted_ids.size());
  run.detail("echoes", bench.echo_ids.size());
}

using StageFn = void (*)(StageRun&);

StageFn stage_fn(std::string_view name) {
  static const std::map<std::string_view, StageFn> fns = {
      {"ingest", stage_ingest},     {"index", stage_index},       {"retrieve", stage_retrieve},
      {"warmup", stage_warmup},     {"score", stage_score},       {"select", stage_select},
      {"pretrain", stage_pretrain}, {"finetune", stage_finetune}, {"evaluate", stage_evaluate},
      {"analyze", stage_analyze},   {"gen-synth", stage_gen_synth},
  };
  const auto it = fns.find(name);
  if (it == fns.end()) throw ValidationError("unknown stage '" + std::string(name) + "'");
  return it->second;
}

Json manifest_object(const StageManifest& m) {
  Json j;
  j["stage"] = m.stage;
  j["tool_version"] = std::string(tool_version());
  j["config_hash"] = m.config_hash;
  j["root_seed"] = m.root_seed;
  j["workers"] = m.workers;
  Json seeds = Json::object();
  for (const auto& [k, v] : m.seeds) seeds[k] = v;
  j["seeds"] = seeds;
  j["seconds"] = m.seconds;
  const auto files = [](const std::vector<FileRecord>& fs) {
    Json a = Json::array();
    for (const auto& f : fs) a.push_back(Json{{"path", f.path}, {"checksum", f.checksum}});
    return a;
  };
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  j["flops"] = m.flops;
  j["cumulative_flops"] = m.cumulative_flops;
  Json details = Json::object();
  for (const auto& [k, v] : m.details) details[k] = v;
  j["details"] = details;
  return j;
}

}  // namespace

std::span<const ConfigKey> config_schema() { return kSchema; }

std::span<const std::string_view> pipeline_stages() { return kStages; }

bool is_stage(std::string_view name) {
  return name == "pipeline" || upstream().count(name) > 0;
}

std::string_view tool_version() { return ISS_VERSION; }

std::uint64_t stage_seed(std::uint64_t root, std::string_view label) {
  return derive_seed(root, "stage:" + std::string(label));
}

Config load_config(const RunOptions& opts) {
  Config given;
  if (opts.config_path) given = Config::load(*opts.config_path);
  for (const auto& [k, v] : opts.overrides) given.set(k, v);
  return Config::resolve(config_schema(), given);
}

std::string manifest_json(const StageManifest& manifest, const Config& config) {
  Json j = manifest_object(manifest);
  Json cfg = Json::object();
  for (const auto& [k, v] : config.entries()) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

std::vector<StageManifest> run_stage(std::string_view stage, const RunOptions& opts) {
  if (opts.workers == 0) throw ValidationError("--workers must be >= 1");
  Context ctx;
  ctx.cfg = load_config(opts);
  ctx.base = opts.config_path ? opts.config_path->parent_path() : fs::path(".");
  if (ctx.base.empty()) ctx.base = ".";
  ctx.out = opts.out;
  ctx.root = opts.seed;
  ctx.workers = opts.workers;

  if (stage != "pipeline") {
    const StageFn fn = stage_fn(stage);
    StageRun run(ctx, std::string(stage));
    fn(run);
    return {run.commit()};
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<StageManifest> all;
  for (const auto s : pipeline_stages()) {
    StageRun run(ctx, std::string(s));
    stage_fn(s)(run);
    all.push_back(run.commit());
  }
  Json j;
  j["stage"] = "pipeline";
  j["tool_version"] = std::string(tool_version());
  j["config_hash"] = ctx.cfg.hash();
  j["root_seed"] = ctx.root;
  j["workers"] = ctx.workers;
  j["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double total = 0.0;
  Json stages = Json::array();
  for (const auto& m : all) {
    total += m.flops;
    stages.push_back(manifest_object(m));
  }
  j["total_flops"] = total;
  j["stages"] = stages;
  Json cfg = Json::object();
  for (const auto& [k, v] : ctx.cfg.entries()) cfg[k] = v;
  j["config"] = cfg;
  io::write_atomic(ctx.out / "pipeline.manifest.json", j.dump(2) + "\n");
  return all;
}

int run_command(std::string_view stage, const RunOptions& opts, std::ostream& log) {
  try {
    for (const auto& m : run_stage(stage, opts)) {
      char secs[32];
      std::snprintf(secs, sizeof secs, "%.3f", m.seconds);
      log << m.stage << ": ok (" << secs << " s";
      for (const auto& f : m.outputs) log << ", " << f.path;
      log << ")\n";
    }
    return 0;
  } catch (const MissingInputError& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return 3;
  } catch (const DivergenceError& e) {
    log << "error: numeric divergence: " << e.what() << '\n';
    return 4;
  } catch (const nlohmann::json::exception& e) {
    log << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace iss
