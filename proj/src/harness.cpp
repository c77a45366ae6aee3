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

#include "divrank/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "divrank/error.hpp"
#include "divrank/random.hpp"

namespace divrank {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Strategy specs

std::string StrategySpec::name() const {
  auto ntn = std::make_shared<const NtnParams>();
  return strategy_name(instantiate(ntn));
}

SamplingStrategy StrategySpec::instantiate(std::shared_ptr<const NtnParams> ntn) const {
  switch (kind) {
    case Kind::kBaseline:
      return Baseline{};
    case Kind::kKnn:
      return Knn{fraction};
    case Kind::kNtnD:
      return NtnD{fraction, std::move(ntn)};
    case Kind::kNtnE:
      return NtnE{fraction, std::move(ntn)};
  }
  throw ArgumentError("unknown strategy kind");
}

StrategySpec StrategySpec::parse(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  std::string_view head = text;
  std::optional<double> fraction;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    head = trim(text.substr(0, colon));
    const std::string tail(trim(text.substr(colon + 1)));
    std::size_t used = 0;
    double f = 0.0;
    try {
      f = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tail.empty() || used != tail.size()) {
      throw ArgumentError("bad strategy fraction in '" + std::string(text) + "'");
    }
    fraction = f;
  }

  StrategySpec spec;
  if (head == "baseline") {
    if (fraction) throw ArgumentError("baseline takes no fraction");
    spec.kind = Kind::kBaseline;
  } else if (head == "knn") {
    spec.kind = Kind::kKnn;
    spec.fraction = fraction.value_or(0.3);
  } else if (head == "ntn-d") {
    spec.kind = Kind::kNtnD;
    spec.fraction = fraction.value_or(0.5);
  } else if (head == "ntn-e") {
    spec.kind = Kind::kNtnE;
    spec.fraction = fraction.value_or(0.5);
  } else {
    throw ArgumentError("unknown strategy '" + std::string(head) + "'");
  }
  validate(spec.instantiate(std::make_shared<const NtnParams>()));
  return spec;
}

std::vector<StrategySpec> parse_strategy_list(std::string_view text) {
  std::vector<StrategySpec> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(StrategySpec::parse(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i].name() == out[j].name()) {
        throw ArgumentError("strategy '" + out[i].name() + "' listed twice");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment

void ExperimentConfig::validate() const {
  if (n_folds < 3) throw ArgumentError("n_folds must be at least 3");
  if (repeats < 1) throw ArgumentError("repeats must be at least 1");
  if (threads < 1) throw ArgumentError("threads must be at least 1");
  if (strategies.empty()) throw ArgumentError("no strategies to run");
  if (!dataset_path) synthetic.validate();
  metric.validate();
  TrainConfig check = train;
  check.strategy = Baseline{};
  check.validate();
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (strategies[i].name() == strategies[j].name()) {
        throw ArgumentError("strategy '" + strategies[i].name() + "' listed twice");
      }
    }
  }
}

const MethodReport* ExperimentReport::find(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

std::map<std::string, double> evaluate_policy(const Dataset& dataset, const PolicyParams& params,
                                              const MetricConfig& metric) {
  metric.validate();
  std::map<std::string, double> mean;
  if (dataset.empty()) return mean;
  const int depth = *std::max_element(metric.cutoffs.begin(), metric.cutoffs.end());
  for (const auto& inst : dataset.instances) {
    const Ranking r = greedy_decode(inst, params, std::min(depth, inst.size()));
    for (const auto& [key, value] : evaluate_ranking(r, inst.judgments, metric)) {
      mean[key] += value;
    }
  }
  for (auto& [key, value] : mean) value /= static_cast<double>(dataset.size());
  return mean;
}

namespace {

// Runs task(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

constexpr const char* kSeedScheme =
    "splitmix64 fan-out: folds=derive(master,[0]); "
    "ntn[f]=derive(master,[2,f]); trial[f,r]=derive(master,[1,f,r])";

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset dataset =
      config.dataset_path ? load_dataset(*config.dataset_path) : generate_synthetic(config.synthetic);
  return run_experiment(dataset, config);
}

ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
  config.validate();
  validate(dataset);
  const auto start = std::chrono::steady_clock::now();

  const auto folds = split_folds(dataset, config.n_folds, derive_seed(config.master_seed, {0}));
  std::vector<Dataset> train_sets, validation_sets, test_sets;
  for (const auto& f : folds) {
    train_sets.push_back(subset(dataset, f.train));
    validation_sets.push_back(subset(dataset, f.validation));
    test_sets.push_back(subset(dataset, f.test));
  }

  const bool any_ntn = std::any_of(config.strategies.begin(), config.strategies.end(),
                                   [](const StrategySpec& s) { return s.needs_ntn(); });
  std::vector<std::shared_ptr<const NtnParams>> ntn(folds.size());
  if (any_ntn) {
    parallel_for(folds.size(), config.threads, [&](std::size_t f) {
      NtnTrainConfig nc = config.ntn;
      nc.seed = derive_seed(config.master_seed, {2, f});
      nc.alpha = config.metric.alpha;
      ntn[f] = std::make_shared<const NtnParams>(ntn_pretrain(train_sets[f], nc));
    });
  }

  ExperimentReport report;
  report.dataset_fingerprint = dataset_fingerprint(dataset);
  report.n_queries = dataset.size();
  report.metric = config.metric;
  report.n_folds = config.n_folds;
  report.repeats = config.repeats;
  report.master_seed = config.master_seed;
  report.seed_scheme = kSeedScheme;
  report.train = config.train;
  report.train.strategy = Baseline{};
  report.ntn = config.ntn;

  const std::size_t per_method = folds.size() * static_cast<std::size_t>(config.repeats);
  report.methods.resize(config.strategies.size());
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    report.methods[s].name = config.strategies[s].name();
    report.methods[s].spec = config.strategies[s];
    report.methods[s].trials.resize(per_method);
  }

  // Results land in preassigned slots, so completion order is irrelevant.
  parallel_for(config.strategies.size() * per_method, config.threads, [&](std::size_t task) {
    const std::size_t s = task / per_method;
    const std::size_t slot = task % per_method;
    const int fold = static_cast<int>(slot / static_cast<std::size_t>(config.repeats));
    const int repeat = static_cast<int>(slot % static_cast<std::size_t>(config.repeats));

    TrainConfig tc = config.train;
    tc.alpha = config.metric.alpha;
    tc.seed = derive_seed(config.master_seed,
                          {1, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(repeat)});
    tc.strategy = config.strategies[s].instantiate(ntn[static_cast<std::size_t>(fold)]);

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result = train(train_sets[fold], validation_sets[fold], tc);
    TrialResult& trial = report.methods[s].trials[slot];
    trial.fold = fold;
    trial.repeat = repeat;
    trial.metrics = evaluate_policy(test_sets[fold], result.params, config.metric);
    trial.eval_count = result.eval_count;
    trial.ntn_eval_count = result.ntn_eval_count;
    trial.episodes = result.episodes;
    trial.iterations = static_cast<int>(result.trace.size());
    trial.best_iteration = result.best_iteration;
    trial.best_validation = result.best_validation;
    trial.trace = std::move(result.trace);
    trial.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  for (auto& m : report.methods) aggregate(m);
  report.total_wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void aggregate(MethodReport& method) {
  method.mean.clear();
  method.stddev.clear();
  method.total_eval_count = 0;
  method.total_ntn_eval_count = 0;
  method.total_episodes = 0;
  method.total_wall_clock_seconds = 0.0;
  if (method.trials.empty()) return;

  const double n = static_cast<double>(method.trials.size());
  for (const auto& t : method.trials) {
    for (const auto& [key, value] : t.metrics) method.mean[key] += value / n;
    method.total_eval_count += t.eval_count;
    method.total_ntn_eval_count += t.ntn_eval_count;
    method.total_episodes += t.episodes;
    method.total_wall_clock_seconds += t.wall_clock_seconds;
  }
  for (const auto& [key, mu] : method.mean) {
    double ss = 0.0;
    for (const auto& t : method.trials) {
      const auto it = t.metrics.find(key);
      const double v = it == t.metrics.end() ? 0.0 : it->second;
      ss += (v - mu) * (v - mu);
    }
    method.stddev[key] = std::sqrt(ss / n);
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

json metric_map(const std::map<std::string, double>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

json train_json(const TrainConfig& c) {
  return json{{"eta", c.eta},
              {"gamma", c.gamma},
              {"m", c.m},
              {"hidden_dim", c.hidden_dim},
              {"max_iterations", c.max_iterations},
              {"patience", c.convergence.patience},
              {"min_delta", c.convergence.min_delta}};
}

const char* kind_name(StrategySpec::Kind k) {
  switch (k) {
    case StrategySpec::Kind::kBaseline:
      return "baseline";
    case StrategySpec::Kind::kKnn:
      return "knn";
    case StrategySpec::Kind::kNtnD:
      return "ntn-d";
    case StrategySpec::Kind::kNtnE:
      return "ntn-e";
  }
  return "?";
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json out;
  out["dataset_fingerprint"] = hex64(report.dataset_fingerprint);
  out["n_queries"] = report.n_queries;
  out["n_folds"] = report.n_folds;
  out["repeats"] = report.repeats;
  out["master_seed"] = report.master_seed;
  out["seed_scheme"] = report.seed_scheme;
  out["metric"] = json{{"alpha", report.metric.alpha}, {"cutoffs", report.metric.cutoffs}};
  out["train"] = train_json(report.train);
  out["ntn"] = json{{"slices", report.ntn.slices},
                    {"learning_rate", report.ntn.learning_rate},
                    {"epochs", report.ntn.epochs},
                    {"list_length", report.ntn.list_length},
                    {"init_scale", report.ntn.init_scale}};
  json methods = json::array();
  for (const auto& m : report.methods) {
    json jm;
    jm["name"] = m.name;
    jm["strategy"] = kind_name(m.spec.kind);
    jm["fraction"] = m.spec.fraction;
    jm["trials"] = m.trials.size();
    jm["mean"] = metric_map(m.mean);
    jm["stddev"] = metric_map(m.stddev);
    jm["total_eval_count"] = m.total_eval_count;
    jm["total_ntn_eval_count"] = m.total_ntn_eval_count;
    jm["total_episodes"] = m.total_episodes;
    json trials = json::array();
    for (const auto& t : m.trials) {
      trials.push_back(json{{"fold", t.fold},
                            {"repeat", t.repeat},
                            {"metrics", metric_map(t.metrics)},
                            {"eval_count", t.eval_count},
                            {"ntn_eval_count", t.ntn_eval_count},
                            {"episodes", t.episodes},
                            {"iterations", t.iterations},
                            {"best_iteration", t.best_iteration},
                            {"best_validation", t.best_validation}});
    }
    jm["per_trial"] = std::move(trials);
    methods.push_back(std::move(jm));
  }
  out["methods"] = std::move(methods);
  return out.dump(2) + "\n";
}

std::string timing_to_json(const ExperimentReport& report) {
  json out;
  out["total_wall_clock_seconds"] = report.total_wall_clock_seconds;
  json methods = json::array();
  for (const auto& m : report.methods) {
    json trials = json::array();
    for (const auto& t : m.trials) {
      trials.push_back(json{{"fold", t.fold},
                            {"repeat", t.repeat},
                            {"wall_clock_seconds", t.wall_clock_seconds}});
    }
    methods.push_back(json{{"name", m.name},
                           {"total_wall_clock_seconds", m.total_wall_clock_seconds},
                           {"per_trial", std::move(trials)}});
  }
  out["methods"] = std::move(methods);
  return out.dump(2) + "\n";
}

void write_method_traces_csv(const MethodReport& method, std::ostream& out) {
  out << "fold,repeat,iteration,wall_clock_seconds,eval_count,val_alpha_ndcg_10,"
         "train_mean_return\n";
  const auto old = out.precision(17);
  for (const auto& t : method.trials) {
    for (const auto& r : t.trace.records) {
      out << t.fold << ',' << t.repeat << ',' << r.iteration << ',' << r.wall_clock_seconds << ','
          << r.eval_count << ',' << r.val_alpha_ndcg_10 << ',' << r.train_mean_return << '\n';
    }
  }
  out.precision(old);
}

// ---------------------------------------------------------------------------
// Comparison

std::optional<TargetHit> time_to_target(const ConvergenceTrace& trace, double target) {
  if (!std::isfinite(target)) throw ArgumentError("target must be finite");
  for (const auto& r : trace.records) {
    if (r.val_alpha_ndcg_10 >= target) {
      return TargetHit{r.iteration, r.wall_clock_seconds, r.eval_count};
    }
  }
  return std::nullopt;
}

namespace {

ComparisonRow summarize(const MethodReport& m, double target) {
  ComparisonRow row;
  row.method = m.name;
  row.final_metrics = m.mean;
  row.trials = static_cast<int>(m.trials.size());
  row.per_episode_eval_count =
      m.total_episodes > 0
          ? static_cast<double>(m.total_eval_count) / static_cast<double>(m.total_episodes)
          : 0.0;
  double iters = 0.0, secs = 0.0, evals = 0.0;
  for (const auto& t : m.trials) {
    if (const auto hit = time_to_target(t.trace, target)) {
      ++row.trials_reaching_target;
      iters += hit->iteration;
      secs += hit->wall_clock_seconds;
      evals += static_cast<double>(hit->eval_count);
    }
  }
  if (row.trials > 0 && row.trials_reaching_target == row.trials) {
    row.mean_iterations_to_target = iters / row.trials;
    row.mean_seconds_to_target = secs / row.trials;
    row.mean_evals_to_target = evals / row.trials;
  }
  return row;
}

std::optional<double> ratio(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  if (*b == 0.0) return *a == 0.0 ? std::optional<double>(1.0) : std::nullopt;
  return *a / *b;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json("not reached");
}

}  // namespace

ComparisonTable compare_strategies(std::span<const ExperimentReport> reports, double target) {
  if (reports.empty()) throw ArgumentError("no reports to compare");
  if (!std::isfinite(target)) throw ArgumentError("target must be finite");
  const ExperimentReport& first = reports.front();
  for (const auto& r : reports) {
    if (r.dataset_fingerprint != first.dataset_fingerprint || r.n_queries != first.n_queries) {
      throw ArgumentError("reports were produced on different datasets");
    }
    if (r.metric.alpha != first.metric.alpha || r.metric.cutoffs != first.metric.cutoffs) {
      throw ArgumentError("reports use different metric configurations");
    }
    if (r.n_folds != first.n_folds) {
      throw ArgumentError("reports use different fold counts");
    }
  }

  ComparisonTable table;
  table.target = target;
  for (const auto& r : reports) {
    for (const auto& m : r.methods) table.rows.push_back(summarize(m, target));
  }
  if (table.rows.empty()) throw ArgumentError("reports contain no methods");

  const auto ref_it = std::find_if(table.rows.begin(), table.rows.end(),
                                   [](const ComparisonRow& row) { return row.method == "baseline"; });
  const ComparisonRow ref = ref_it != table.rows.end() ? *ref_it : table.rows.front();
  table.reference = ref.method;
  for (auto& row : table.rows) {
    row.per_episode_eval_ratio = ref.per_episode_eval_count > 0.0
                                     ? row.per_episode_eval_count / ref.per_episode_eval_count
                                     : 0.0;
    row.time_to_target_ratio = ratio(row.mean_seconds_to_target, ref.mean_seconds_to_target);
    row.evals_to_target_ratio = ratio(row.mean_evals_to_target, ref.mean_evals_to_target);
  }
  return table;
}

std::string comparison_to_json(const ComparisonTable& table) {
  json out;
  out["target"] = table.target;
  out["reference"] = table.reference;
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back(json{{"method", r.method},
                        {"final_metrics", metric_map(r.final_metrics)},
                        {"per_episode_eval_count", r.per_episode_eval_count},
                        {"per_episode_eval_ratio", r.per_episode_eval_ratio},
                        {"trials", r.trials},
                        {"trials_reaching_target", r.trials_reaching_target},
                        {"mean_iterations_to_target", optional_json(r.mean_iterations_to_target)},
                        {"mean_seconds_to_target", optional_json(r.mean_seconds_to_target)},
                        {"mean_evals_to_target", optional_json(r.mean_evals_to_target)},
                        {"time_to_target_ratio", optional_json(r.time_to_target_ratio)},
                        {"evals_to_target_ratio", optional_json(r.evals_to_target_ratio)}});
  }
  out["rows"] = std::move(rows);
  return out.dump(2) + "\n";
}

void write_comparison_text(const ComparisonTable& table, std::ostream& out) {
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("not reached");
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << *v;
    return os.str();
  };
  out << "target alpha-NDCG@10 " << table.target << ", reference " << table.reference << "\n";
  out << std::left << std::setw(14) << "method" << std::setw(12) << "a-NDCG@10" << std::setw(12)
      << "ERR-IA@10" << std::setw(12) << "evals/ep" << std::setw(10) << "ratio" << std::setw(10)
      << "reached" << std::setw(14) << "evals ratio" << "time ratio\n";
  for (const auto& r : table.rows) {
    auto metric = [&](const char* key) {
      const auto it = r.final_metrics.find(key);
      return it == r.final_metrics.end() ? std::optional<double>() : it->second;
    };
    out << std::left << std::setw(14) << r.method << std::setw(12) << fmt(metric("alpha_ndcg@10"))
        << std::setw(12) << fmt(metric("err_ia@10")) << std::setw(12)
        << fmt(r.per_episode_eval_count) << std::setw(10) << fmt(r.per_episode_eval_ratio)
        << std::setw(10)
        << (std::to_string(r.trials_reaching_target) + "/" + std::to_string(r.trials))
        << std::setw(14) << fmt(r.evals_to_target_ratio) << fmt(r.time_to_target_ratio) << "\n";
  }
}

}  // namespace divrank
