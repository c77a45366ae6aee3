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

// divrank: command-line front end.
//
//   divrank gen-synthetic ...   write a synthetic JSONL corpus
//   divrank pretrain-ntn ...    fit NTN scorer parameters
//   divrank train ...           train one policy (fold 0 split)
//   divrank evaluate ...        score a saved policy
//   divrank benchmark ...       cross-validated strategy comparison
//
// Exit status: 0 ok, 1 usage, 2 bad data, 3 non-finite numbers.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "divrank/corpus.hpp"
#include "divrank/error.hpp"
#include "divrank/harness.hpp"
#include "divrank/mdp.hpp"
#include "divrank/metrics.hpp"
#include "divrank/ntn.hpp"
#include "divrank/random.hpp"
#include "divrank/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw divrank::ArgumentError("cannot write " + path.string());
  out << text;
}

std::vector<int> parse_cutoffs(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(k);
    } catch (const std::exception&) {
      throw divrank::ArgumentError("bad cutoff '" + item + "'");
    }
  }
  return out;
}

json metrics_json(const std::map<std::string, double>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

struct TrainFlags {
  double eta = 0.001;
  double gamma = 1.0;
  int m = 10;
  int hidden = 0;
  int max_iters = 2000;
  int patience = 500;
  double min_delta = 1e-4;
  double alpha = 0.5;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--eta", eta, "Learning rate")->capture_default_str();
    cmd->add_option("--gamma", gamma, "Discount factor")->capture_default_str();
    cmd->add_option("--m", m, "Episode length")->capture_default_str();
    cmd->add_option("--hidden", hidden, "Utility dimension (0 = embedding dimension)")
        ->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
    cmd->add_option("--patience", patience, "Early-stopping patience")->capture_default_str();
    cmd->add_option("--min-delta", min_delta, "Minimum validation improvement")
        ->capture_default_str();
    cmd->add_option("--alpha", alpha, "Redundancy penalty of alpha-NDCG")->capture_default_str();
  }

  divrank::TrainConfig config() const {
    divrank::TrainConfig c;
    c.eta = eta;
    c.gamma = gamma;
    c.m = m;
    c.hidden_dim = hidden;
    c.max_iterations = max_iters;
    c.convergence.patience = patience;
    c.convergence.min_delta = min_delta;
    c.alpha = alpha;
    return c;
  }
};

struct NtnFlags {
  int slices = 100;
  double lr = 0.009;
  int epochs = 20;
  int list_length = 10;

  void add_to(CLI::App* cmd, bool primary) {
    const std::string note = primary ? "" : " (NTN strategies)";
    cmd->add_option("--slices", slices, "Tensor slices" + note)->capture_default_str();
    cmd->add_option("--lr", lr, "NTN learning rate" + note)->capture_default_str();
    cmd->add_option("--epochs", epochs, "NTN epochs" + note)->capture_default_str();
    cmd->add_option("--list-length", list_length, "Target list length" + note)
        ->capture_default_str();
  }

  divrank::NtnTrainConfig config(std::uint64_t seed, double alpha) const {
    divrank::NtnTrainConfig c;
    c.slices = slices;
    c.learning_rate = lr;
    c.epochs = epochs;
    c.list_length = list_length;
    c.seed = seed;
    c.alpha = alpha;
    return c;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Search result diversification with policy-gradient ranking"};
  app.require_subcommand(1);

  // gen-synthetic
  divrank::SyntheticConfig syn;
  fs::path syn_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic corpus as JSONL");
  gen->add_option("--queries", syn.n_queries, "Number of queries")->capture_default_str();
  gen->add_option("--docs", syn.docs_per_query, "Documents per query")->capture_default_str();
  gen->add_option("--subtopics", syn.subtopics, "Subtopics per query")->capture_default_str();
  gen->add_option("--dim", syn.dimension, "Embedding dimension")->capture_default_str();
  gen->add_option("--relevant-frac", syn.relevant_fraction, "Fraction of relevant documents")
      ->capture_default_str();
  gen->add_option("--noise", syn.subtopic_noise_scale, "Gaussian noise around subtopic centers")
      ->capture_default_str();
  gen->add_option("--spread", syn.subtopic_spread, "Spread of subtopic centers around the topic")
      ->capture_default_str();
  gen->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", syn_out, "Output JSONL path")->required();

  // pretrain-ntn
  fs::path pre_data, pre_out;
  NtnFlags pre_flags;
  std::uint64_t pre_seed = 0;
  double pre_alpha = 0.5;
  auto* pre = app.add_subcommand("pretrain-ntn", "Fit the NTN scorer on a corpus");
  pre->add_option("--data", pre_data, "Corpus JSONL")->required();
  pre_flags.add_to(pre, true);
  pre->add_option("--seed", pre_seed, "Random seed")->capture_default_str();
  pre->add_option("--alpha", pre_alpha, "Redundancy penalty for target rankings")
      ->capture_default_str();
  pre->add_option("--out", pre_out, "Output parameter JSON")->required();

  // train
  fs::path tr_data, tr_ntn, tr_out;
  std::string tr_strategy = "baseline";
  double tr_fraction = -1.0;
  TrainFlags tr_flags;
  NtnFlags tr_ntn_flags;
  std::uint64_t tr_seed = 0;
  int tr_folds = 5;
  auto* tr = app.add_subcommand("train", "Train one policy on the fold-0 split");
  tr->add_option("--data", tr_data, "Corpus JSONL")->required();
  tr->add_option("--strategy", tr_strategy, "Sampling strategy")
      ->check(CLI::IsMember({"baseline", "knn", "ntn-d", "ntn-e"}))
      ->capture_default_str();
  tr->add_option("--fraction", tr_fraction,
                 "Discard fraction (knn) or keep fraction (ntn-d, ntn-e); default 0.3 / 0.5");
  tr->add_option("--ntn", tr_ntn, "Pretrained NTN parameters (fitted on the split if absent)");
  tr_flags.add_to(tr);
  tr_ntn_flags.add_to(tr, false);
  tr->add_option("--folds", tr_folds, "Fold count used to carve the split")->capture_default_str();
  tr->add_option("--seed", tr_seed, "Random seed")->capture_default_str();
  tr->add_option("--out", tr_out, "Output directory")->required();

  // evaluate
  fs::path ev_data, ev_params, ev_out;
  std::string ev_cutoffs = "5,10";
  double ev_alpha = 0.5;
  auto* ev = app.add_subcommand("evaluate", "Score a saved policy on a corpus");
  ev->add_option("--data", ev_data, "Corpus JSONL")->required();
  ev->add_option("--params", ev_params, "Policy parameter JSON")->required();
  ev->add_option("--cutoffs", ev_cutoffs, "Comma-separated metric depths")->capture_default_str();
  ev->add_option("--alpha", ev_alpha, "Redundancy penalty")->capture_default_str();
  ev->add_option("--out", ev_out, "Write metrics JSON here instead of stdout");

  // benchmark
  fs::path bm_data, bm_out;
  std::string bm_strategies = "baseline,knn:0.3";
  int bm_folds = 5, bm_repeats = 5, bm_threads = 1;
  double bm_target = 0.48;
  std::uint64_t bm_seed = 0;
  TrainFlags bm_flags;
  NtnFlags bm_ntn_flags;
  auto* bm = app.add_subcommand("benchmark", "Cross-validated comparison of strategies");
  bm->add_option("--data", bm_data, "Corpus JSONL")->required();
  bm->add_option("--strategies", bm_strategies, "e.g. baseline,knn:0.3,ntn-e:0.5")
      ->capture_default_str();
  bm->add_option("--folds", bm_folds, "Cross-validation folds")->capture_default_str();
  bm->add_option("--repeats", bm_repeats, "Runs per fold")->capture_default_str();
  bm->add_option("--target", bm_target, "Validation alpha-NDCG@10 target")->capture_default_str();
  bm->add_option("--seed", bm_seed, "Master seed")->capture_default_str();
  bm->add_option("--threads", bm_threads, "Concurrent trials")->capture_default_str();
  bm_flags.add_to(bm);
  bm_ntn_flags.add_to(bm, false);
  bm->add_option("--out", bm_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    divrank::write_dataset(divrank::generate_synthetic(syn), syn_out);
    std::cerr << "wrote " << syn.n_queries << " queries to " << syn_out.string() << "\n";
    return 0;
  }

  if (pre->parsed()) {
    const auto data = divrank::load_dataset(pre_data);
    const auto params = divrank::ntn_pretrain(data, pre_flags.config(pre_seed, pre_alpha));
    if (pre_out.has_parent_path()) fs::create_directories(pre_out.parent_path());
    divrank::save_ntn(params, pre_out);
    return 0;
  }

  if (tr->parsed()) {
    const auto data = divrank::load_dataset(tr_data);
    divrank::Dataset train_set, validation_set, test_set;
    if (data.size() >= static_cast<std::size_t>(tr_folds) && tr_folds >= 3) {
      const auto folds = divrank::split_folds(data, tr_folds, divrank::derive_seed(tr_seed, {0}));
      train_set = divrank::subset(data, folds[0].train);
      validation_set = divrank::subset(data, folds[0].validation);
      test_set = divrank::subset(data, folds[0].test);
    } else {
      // Too few queries to split: train and validate on everything.
      train_set = data;
    }

    std::string spec_text = tr_strategy;
    if (tr_fraction >= 0.0) {
      if (tr_strategy == "baseline") throw divrank::ArgumentError("baseline takes no --fraction");
      spec_text += ":" + std::to_string(tr_fraction);
    }
    const auto spec = divrank::StrategySpec::parse(spec_text);

    divrank::TrainConfig cfg = tr_flags.config();
    cfg.seed = tr_seed;
    std::shared_ptr<const divrank::NtnParams> ntn;
    if (spec.needs_ntn()) {
      ntn = std::make_shared<const divrank::NtnParams>(
          tr_ntn.empty() ? divrank::ntn_pretrain(
                               train_set, tr_ntn_flags.config(divrank::derive_seed(tr_seed, {2}),
                                                              cfg.alpha))
                         : divrank::load_ntn(tr_ntn));
    }
    cfg.strategy = spec.instantiate(ntn);

    const auto result = divrank::train(train_set, validation_set, cfg);
    fs::create_directories(tr_out);
    divrank::save_policy(result.params, tr_out / "params.json");
    {
      std::ofstream csv(tr_out / "trace.csv");
      divrank::write_trace_csv(result.trace, csv);
    }
    json summary;
    summary["strategy"] = spec.name();
    summary["iterations"] = result.trace.size();
    summary["best_iteration"] = result.best_iteration;
    summary["best_validation_alpha_ndcg@10"] = result.best_validation;
    summary["episodes"] = result.episodes;
    summary["eval_count"] = result.eval_count;
    summary["ntn_eval_count"] = result.ntn_eval_count;
    divrank::MetricConfig mc;
    mc.alpha = cfg.alpha;
    if (!test_set.empty()) {
      summary["test"] = metrics_json(divrank::evaluate_policy(test_set, result.params, mc));
    }
    write_text(tr_out / "summary.json", summary.dump(2) + "\n");
    std::cerr << spec.name() << ": best validation alpha-NDCG@10 " << result.best_validation
              << " at iteration " << result.best_iteration << "\n";
    return 0;
  }

  if (ev->parsed()) {
    const auto data = divrank::load_dataset(ev_data);
    const auto params = divrank::load_policy(ev_params);
    if (params.dimension() != data.dimension) {
      throw divrank::DimensionError("policy dimension does not match the corpus");
    }
    divrank::MetricConfig mc;
    mc.alpha = ev_alpha;
    mc.cutoffs = parse_cutoffs(ev_cutoffs);
    json out;
    out["queries"] = data.size();
    out["metrics"] = metrics_json(divrank::evaluate_policy(data, params, mc));
    const std::string text = out.dump(2) + "\n";
    if (ev_out.empty()) {
      std::cout << text;
    } else {
      write_text(ev_out, text);
    }
    return 0;
  }

  if (bm->parsed()) {
    divrank::ExperimentConfig cfg;
    cfg.dataset_path = bm_data;
    cfg.n_folds = bm_folds;
    cfg.repeats = bm_repeats;
    cfg.train = bm_flags.config();
    cfg.metric.alpha = bm_flags.alpha;
    cfg.ntn = bm_ntn_flags.config(0, bm_flags.alpha);
    cfg.strategies = divrank::parse_strategy_list(bm_strategies);
    cfg.master_seed = bm_seed;
    cfg.threads = bm_threads;
    const auto report = divrank::run_experiment(cfg);

    fs::create_directories(bm_out);
    write_text(bm_out / "report.json", divrank::report_to_json(report));
    write_text(bm_out / "timing.json", divrank::timing_to_json(report));
    const auto table =
        divrank::compare_strategies(std::span<const divrank::ExperimentReport>(&report, 1),
                                    bm_target);
    write_text(bm_out / "comparison.json", divrank::comparison_to_json(table));
    for (const auto& m : report.methods) {
      std::string file = m.name;
      for (char& c : file) {
        if (c == '(' || c == ')') c = '_';
      }
      while (!file.empty() && file.back() == '_') file.pop_back();
      std::ofstream csv(bm_out / ("trace_" + file + ".csv"));
      divrank::write_method_traces_csv(m, csv);
    }
    divrank::write_comparison_text(table, std::cout);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const divrank::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const divrank::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const divrank::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
