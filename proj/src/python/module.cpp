/*
 * Copyright 2026 The divrank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python bindings. Judgments cross the boundary as 2-D integer arrays
// (documents x subtopics), embeddings as float64 arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "divrank/corpus.hpp"
#include "divrank/error.hpp"
#include "divrank/harness.hpp"
#include "divrank/mdp.hpp"
#include "divrank/metrics.hpp"
#include "divrank/ntn.hpp"
#include "divrank/random.hpp"
#include "divrank/sampling.hpp"
#include "divrank/trainer.hpp"

namespace py = pybind11;
using namespace divrank;

namespace {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

JudgmentMatrix to_judgments(const IntMatrix& j) {
  JudgmentMatrix out(static_cast<int>(j.rows()), static_cast<int>(j.cols()));
  for (Eigen::Index r = 0; r < j.rows(); ++r) {
    for (Eigen::Index c = 0; c < j.cols(); ++c) {
      if (j(r, c) != 0 && j(r, c) != 1) throw IntegrityError("judgments must be 0 or 1");
      out.set(static_cast<int>(r), static_cast<int>(c), j(r, c) != 0);
    }
  }
  return out;
}

IntMatrix from_judgments(const JudgmentMatrix& j) {
  IntMatrix out(j.rows(), j.cols());
  for (int r = 0; r < j.rows(); ++r) {
    for (int c = 0; c < j.cols(); ++c) out(r, c) = j(r, c) ? 1 : 0;
  }
  return out;
}

Matrix embeddings(const QueryInstance& inst) {
  Matrix out(inst.size(), inst.dimension());
  for (int i = 0; i < inst.size(); ++i) out.row(i) = inst.embedding(i).transpose();
  return out;
}

QueryInstance make_instance(const std::string& id, const Vector& query, const Matrix& docs,
                            const IntMatrix& judgments) {
  QueryInstance inst;
  inst.query.id = id;
  inst.query.embedding = query;
  inst.query.subtopic_count = static_cast<int>(judgments.cols());
  for (Eigen::Index i = 0; i < docs.rows(); ++i) {
    inst.documents.push_back({id + "-" + std::to_string(i), docs.row(i).transpose()});
  }
  inst.judgments = to_judgments(judgments);
  validate(inst, static_cast<int>(query.size()));
  return inst;
}

py::dict trial_dict(const TrialResult& t) {
  py::dict d;
  d["fold"] = t.fold;
  d["repeat"] = t.repeat;
  d["metrics"] = t.metrics;
  d["eval_count"] = t.eval_count;
  d["ntn_eval_count"] = t.ntn_eval_count;
  d["episodes"] = t.episodes;
  d["iterations"] = t.iterations;
  d["best_iteration"] = t.best_iteration;
  d["best_validation"] = t.best_validation;
  return d;
}

}  // namespace

PYBIND11_MODULE(_divrank, m) {
  m.doc() = "Search result diversification with policy-gradient ranking";

  static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
  static py::exception<DataError> data_error(m, "DataError", base_error.ptr());
  static py::exception<NumericalError> numerical_error(m, "NumericalError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ArgumentError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  // Corpus

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("n_queries", &SyntheticConfig::n_queries)
      .def_readwrite("docs_per_query", &SyntheticConfig::docs_per_query)
      .def_readwrite("subtopics", &SyntheticConfig::subtopics)
      .def_readwrite("dimension", &SyntheticConfig::dimension)
      .def_readwrite("relevant_fraction", &SyntheticConfig::relevant_fraction)
      .def_readwrite("subtopic_noise_scale", &SyntheticConfig::subtopic_noise_scale)
      .def_readwrite("subtopic_spread", &SyntheticConfig::subtopic_spread)
      .def_readwrite("seed", &SyntheticConfig::seed);

  py::class_<QueryInstance>(m, "QueryInstance")
      .def(py::init(&make_instance), py::arg("query_id"), py::arg("query_embedding"),
           py::arg("document_embeddings"), py::arg("judgments"))
      .def_property_readonly("query_id", [](const QueryInstance& q) { return q.query.id; })
      .def_property_readonly("query_embedding",
                             [](const QueryInstance& q) { return q.query.embedding; })
      .def_property_readonly("document_ids",
                             [](const QueryInstance& q) {
                               std::vector<std::string> ids;
                               for (const auto& d : q.documents) ids.push_back(d.id);
                               return ids;
                             })
      .def_property_readonly("document_embeddings", &embeddings)
      .def_property_readonly("judgments",
                             [](const QueryInstance& q) { return from_judgments(q.judgments); })
      .def("__len__", &QueryInstance::size);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](std::vector<QueryInstance> instances) {
        Dataset ds;
        ds.dimension = instances.empty() ? 0 : instances.front().dimension();
        ds.instances = std::move(instances);
        validate(ds);
        return ds;
      }))
      .def_readonly("instances", &Dataset::instances)
      .def_readonly("dimension", &Dataset::dimension)
      .def("__len__", &Dataset::size)
      .def("__getitem__",
           [](const Dataset& ds, std::size_t i) {
             if (i >= ds.size()) throw py::index_error();
             return ds.instances[i];
           })
      .def("to_jsonl", &dataset_to_string)
      .def("fingerprint", &dataset_fingerprint);

  m.def("generate_synthetic", &generate_synthetic, py::arg("config"));
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("parse_dataset", [](const std::string& text) {
    std::istringstream in(text);
    return parse_dataset(in);
  });
  m.def("write_dataset",
        py::overload_cast<const Dataset&, const std::filesystem::path&>(&write_dataset),
        py::arg("dataset"), py::arg("path"));
  m.def(
      "split_folds",
      [](std::size_t n, int k, std::uint64_t seed) {
        py::list out;
        for (const auto& f : split_folds(n, k, seed)) {
          py::dict d;
          d["train"] = f.train;
          d["validation"] = f.validation;
          d["test"] = f.test;
          out.append(d);
        }
        return out;
      },
      py::arg("n_queries"), py::arg("n_folds"), py::arg("seed"));
  m.def("subset", [](const Dataset& ds, std::vector<std::size_t> idx) { return subset(ds, idx); });

  // Metrics

  m.def(
      "alpha_dcg",
      [](const Ranking& r, const IntMatrix& j, double alpha, int k) {
        return alpha_dcg(r, to_judgments(j), alpha, k);
      },
      py::arg("ranking"), py::arg("judgments"), py::arg("alpha") = 0.5, py::arg("cutoff") = 10);
  m.def(
      "alpha_ndcg",
      [](const Ranking& r, const IntMatrix& j, double alpha, int k) {
        return alpha_ndcg(r, to_judgments(j), alpha, k);
      },
      py::arg("ranking"), py::arg("judgments"), py::arg("alpha") = 0.5, py::arg("cutoff") = 10);
  m.def(
      "err_ia",
      [](const Ranking& r, const IntMatrix& j, int k) { return err_ia(r, to_judgments(j), k); },
      py::arg("ranking"), py::arg("judgments"), py::arg("cutoff") = 10);
  m.def(
      "s_recall",
      [](const Ranking& r, const IntMatrix& j, int k) { return s_recall(r, to_judgments(j), k); },
      py::arg("ranking"), py::arg("judgments"), py::arg("cutoff") = 10);
  m.def(
      "greedy_ideal_ranking",
      [](const IntMatrix& j, double alpha, int length) {
        return greedy_ideal_ranking(to_judgments(j), alpha, length);
      },
      py::arg("judgments"), py::arg("alpha") = 0.5, py::arg("length") = 10);
  m.def(
      "evaluate_ranking",
      [](const Ranking& r, const IntMatrix& j, double alpha, std::vector<int> cutoffs) {
        MetricConfig mc;
        mc.alpha = alpha;
        mc.cutoffs = std::move(cutoffs);
        return evaluate_ranking(r, to_judgments(j), mc);
      },
      py::arg("ranking"), py::arg("judgments"), py::arg("alpha") = 0.5,
      py::arg("cutoffs") = std::vector<int>{5, 10});

  // Policy

  py::class_<PolicyParams>(m, "PolicyParams")
      .def(py::init([](const Matrix& U, const Matrix& V, const Matrix& W) {
             PolicyParams p{U, V, W};
             p.validate();
             return p;
           }),
           py::arg("U"), py::arg("V"), py::arg("W"))
      .def_static("zeros", &PolicyParams::zeros, py::arg("dimension"), py::arg("hidden_dim"))
      .def_static(
          "random",
          [](int d, int h, std::uint64_t seed) {
            RngStream rng(seed);
            return PolicyParams::random(d, h, rng);
          },
          py::arg("dimension"), py::arg("hidden_dim"), py::arg("seed") = 0)
      .def_readwrite("U", &PolicyParams::U)
      .def_readwrite("V", &PolicyParams::V)
      .def_readwrite("W", &PolicyParams::W)
      .def("to_json", &policy_to_json)
      .def_static("from_json", &policy_from_json);

  m.def("greedy_decode", &greedy_decode, py::arg("instance"), py::arg("params"), py::arg("m"));
  m.def(
      "policy_probs",
      [](const QueryInstance& inst, const PolicyParams& p, const std::vector<int>& prefix) {
        RankingState s = init_state(inst, p);
        for (int a : prefix) s = transition(s, a, inst, p);
        return py::make_tuple(s.remaining, policy_probs(s, inst, p));
      },
      py::arg("instance"), py::arg("params"), py::arg("prefix") = std::vector<int>{},
      "Candidate ids and their selection probabilities after the given prefix.");

  // NTN

  py::class_<NtnParams, std::shared_ptr<NtnParams>>(m, "NtnParams")
      .def_readonly("omega", &NtnParams::omega)
      .def_readonly("mu", &NtnParams::mu)
      .def_property_readonly("slices", [](const NtnParams& p) { return p.slices.size(); })
      .def("to_json", &ntn_to_json)
      .def_static("from_json", [](const std::string& text) {
        return std::make_shared<NtnParams>(ntn_from_json(text));
      });

  m.def(
      "ntn_pretrain",
      [](const Dataset& ds, int slices, double lr, int epochs, std::uint64_t seed) {
        NtnTrainConfig c;
        c.slices = slices;
        c.learning_rate = lr;
        c.epochs = epochs;
        c.seed = seed;
        return std::make_shared<NtnParams>(ntn_pretrain(ds, c));
      },
      py::arg("dataset"), py::arg("slices") = 100, py::arg("learning_rate") = 0.009,
      py::arg("epochs") = 20, py::arg("seed") = 0);
  m.def("ntn_rank", &ntn_rank, py::arg("instance"), py::arg("params"), py::arg("length"));

  // Training and experiments

  m.def(
      "train",
      [](const Dataset& tr, const Dataset& va, const std::string& strategy,
         std::shared_ptr<NtnParams> ntn, double eta, double gamma, int m_len, int max_iterations,
         int patience, std::uint64_t seed) {
        TrainConfig c;
        c.eta = eta;
        c.gamma = gamma;
        c.m = m_len;
        c.max_iterations = max_iterations;
        c.convergence.patience = patience;
        c.seed = seed;
        c.strategy = StrategySpec::parse(strategy).instantiate(ntn);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(tr, va, c);
        }
        py::list trace;
        for (const auto& rec : r.trace.records) {
          py::dict d;
          d["iteration"] = rec.iteration;
          d["wall_clock_seconds"] = rec.wall_clock_seconds;
          d["eval_count"] = rec.eval_count;
          d["val_alpha_ndcg_10"] = rec.val_alpha_ndcg_10;
          d["train_mean_return"] = rec.train_mean_return;
          trace.append(d);
        }
        py::dict out;
        out["params"] = r.params;
        out["trace"] = trace;
        out["best_iteration"] = r.best_iteration;
        out["best_validation"] = r.best_validation;
        out["episodes"] = r.episodes;
        out["eval_count"] = r.eval_count;
        out["ntn_eval_count"] = r.ntn_eval_count;
        return out;
      },
      py::arg("train_set"), py::arg("validation_set"), py::arg("strategy") = "baseline",
      py::arg("ntn") = nullptr, py::arg("eta") = 0.001, py::arg("gamma") = 1.0, py::arg("m") = 10,
      py::arg("max_iterations") = 2000, py::arg("patience") = 500, py::arg("seed") = 0);

  m.def(
      "evaluate_policy",
      [](const Dataset& ds, const PolicyParams& p, double alpha, std::vector<int> cutoffs) {
        MetricConfig mc;
        mc.alpha = alpha;
        mc.cutoffs = std::move(cutoffs);
        return evaluate_policy(ds, p, mc);
      },
      py::arg("dataset"), py::arg("params"), py::arg("alpha") = 0.5,
      py::arg("cutoffs") = std::vector<int>{5, 10});

  m.def(
      "run_experiment",
      [](const Dataset& ds, const std::string& strategies, int folds, int repeats,
         int max_iterations, std::uint64_t seed, int ntn_slices, int ntn_epochs, int threads) {
        ExperimentConfig c;
        c.strategies = parse_strategy_list(strategies);
        c.n_folds = folds;
        c.repeats = repeats;
        c.train.max_iterations = max_iterations;
        c.master_seed = seed;
        c.ntn.slices = ntn_slices;
        c.ntn.epochs = ntn_epochs;
        c.threads = threads;
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(ds, c);
        }
        py::dict methods;
        for (const auto& mr : r.methods) {
          py::dict d;
          d["mean"] = mr.mean;
          d["stddev"] = mr.stddev;
          d["total_eval_count"] = mr.total_eval_count;
          d["total_episodes"] = mr.total_episodes;
          py::list trials;
          for (const auto& t : mr.trials) trials.append(trial_dict(t));
          d["trials"] = trials;
          methods[py::str(mr.name)] = d;
        }
        py::dict out;
        out["methods"] = methods;
        out["report_json"] = report_to_json(r);
        return out;
      },
      py::arg("dataset"), py::arg("strategies") = "baseline", py::arg("folds") = 5,
      py::arg("repeats") = 1, py::arg("max_iterations") = 2000, py::arg("seed") = 0,
      py::arg("ntn_slices") = 100, py::arg("ntn_epochs") = 20, py::arg("threads") = 1);

  m.attr("__version__") = "0.1.0";
}
