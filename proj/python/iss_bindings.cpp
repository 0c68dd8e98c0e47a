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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "iss/common.hpp"
#include "iss/corpus.hpp"
#include "iss/evaluation.hpp"
#include "iss/influence.hpp"
#include "iss/pipeline.hpp"
#include "iss/retrieval.hpp"
#include "iss/selection.hpp"

namespace py = pybind11;

namespace {

iss::Documents to_documents(const std::vector<std::vector<iss::TokenId>>& docs) {
  iss::Documents out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.push_back(iss::Document{std::to_string(i), "", docs[i]});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Influence-based pretraining subset selection";
  m.attr("__version__") = std::string(iss::tool_version());

  py::register_exception<iss::MissingInputError>(m, "MissingInputError", PyExc_FileNotFoundError);
  py::register_exception<iss::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<iss::DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  m.def("tokenize", &iss::tokenize, py::arg("text"));

  m.def(
      "bm25_scores",
      [](const std::vector<std::vector<iss::TokenId>>& docs,
         const std::vector<iss::TokenId>& query, double k1, double b) {
        return iss::Bm25Index::build(to_documents(docs), {k1, b}).score_all(query);
      },
      py::arg("docs"), py::arg("query"), py::arg("k1") = 1.2, py::arg("b") = 0.75,
      "BM25 score of every document (token id lists) for one query.");

  m.def(
      "influence_score",
      [](const Eigen::VectorXd& g_p, const Eigen::VectorXd& g_t, double lr) {
        return iss::influence_score(g_p, g_t, lr);
      },
      py::arg("g_p"), py::arg("g_t"), py::arg("lr"));

  m.def(
      "select_topk",
      [](const std::vector<std::tuple<std::string, std::string, double>>& rows, std::size_t k,
         std::size_t max_size) {
        std::vector<iss::InfluenceRecord> records;
        records.reserve(rows.size());
        for (const auto& [c, a, s] : rows) records.push_back({c, a, s});
        return iss::select_topk(records, k, max_size).members;
      },
      py::arg("records"), py::arg("k"), py::arg("max_size") = 0,
      "Union of per-anchor top-k candidates from (candidate, anchor, score) rows.");

  m.def("minibatch_dot_products", &iss::minibatch_dot_products, py::arg("candidates"),
        py::arg("anchors"), py::arg("batch_candidates"), py::arg("batch_anchors"));

  m.def(
      "f1",
      [](const std::vector<std::size_t>& preds, const std::vector<std::size_t>& golds,
         const std::string& mode) {
        return iss::compute_f1(preds, golds, iss::parse_f1_mode(mode));
      },
      py::arg("preds"), py::arg("golds"), py::arg("mode") = "macro");

  m.def("flops", &iss::flops, py::arg("param_count"), py::arg("tokens"));
  m.def("pmi_from_counts", &iss::pmi_from_counts, py::arg("n"), py::arg("n_w"), py::arg("n_y"),
        py::arg("n_wy"));
  m.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return iss::spearman(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "run",
      [](const std::string& stage, std::optional<std::string> config, const std::string& out,
         std::uint64_t seed, std::size_t workers, const std::map<std::string, std::string>& set) {
        iss::RunOptions opts;
        if (config) opts.config_path = *config;
        opts.out = out;
        opts.seed = seed;
        opts.workers = workers;
        for (const auto& kv : set) opts.overrides.emplace_back(kv);
        std::ostringstream log;
        int code;
        {
          py::gil_scoped_release release;
          code = iss::run_command(stage, opts, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("stage"), py::arg("config") = py::none(), py::arg("out") = ".",
      py::arg("seed") = 0, py::arg("workers") = 1,
      py::arg("set") = std::map<std::string, std::string>{},
      "Run one CLI stage; returns (exit_code, log).");
}
