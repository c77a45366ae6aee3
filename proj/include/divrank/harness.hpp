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

// Cross-validated experiments: per fold and repeat, train each strategy,
// early-stop on validation, score the test split, aggregate.
//
// Seeds fan out from one master seed:
//   fold split        derive_seed(master, {0})
//   NTN for fold f    derive_seed(master, {2, f})
//   trial (f, r)      derive_seed(master, {1, f, r})
// Every strategy of a trial shares the trial seed, so strategies start from
// identical parameters.

#ifndef DIVRANK_HARNESS_HPP
#define DIVRANK_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divrank/corpus.hpp"
#include "divrank/metrics.hpp"
#include "divrank/ntn.hpp"
#include "divrank/trainer.hpp"

namespace divrank {

struct StrategySpec {
  enum class Kind { kBaseline, kKnn, kNtnD, kNtnE };
  Kind kind = Kind::kBaseline;
  double fraction = 0.0;

  bool needs_ntn() const { return kind == Kind::kNtnD || kind == Kind::kNtnE; }
  /// Same spelling as strategy_name(): "baseline", "knn(0.3)", ...
  std::string name() const;
  SamplingStrategy instantiate(std::shared_ptr<const NtnParams> ntn) const;

  /// Accepts "baseline", "knn", "knn:0.3", "ntn-d:0.5", "ntn-e". Default
  /// fractions: 0.3 for knn, 0.5 for the NTN filters.
  static StrategySpec parse(std::string_view text);
  bool operator==(const StrategySpec&) const = default;
};

/// Comma-separated list of StrategySpec::parse items.
std::vector<StrategySpec> parse_strategy_list(std::string_view text);

struct ExperimentConfig {
  /// When empty, the synthetic config generates the corpus.
  std::optional<std::filesystem::path> dataset_path;
  SyntheticConfig synthetic;
  int n_folds = 5;
  int repeats = 5;
  TrainConfig train;  // its seed and strategy are overridden per trial
  MetricConfig metric;
  NtnTrainConfig ntn;
  std::vector<StrategySpec> strategies{StrategySpec{}};
  std::uint64_t master_seed = 0;
  /// Worker threads for fold x repeat trials. Results do not depend on it.
  int threads = 1;

  void validate() const;
};

struct TrialResult {
  int fold = 0;
  int repeat = 0;
  std::map<std::string, double> metrics;  // test split, mean over queries
  long long eval_count = 0;
  long long ntn_eval_count = 0;
  long long episodes = 0;
  int iterations = 0;
  int best_iteration = 0;
  double best_validation = 0.0;
  double wall_clock_seconds = 0.0;
  ConvergenceTrace trace;
};

struct MethodReport {
  std::string name;
  StrategySpec spec;
  std::vector<TrialResult> trials;  // ordered by (fold, repeat)
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;  // population standard deviation
  long long total_eval_count = 0;
  long long total_ntn_eval_count = 0;
  long long total_episodes = 0;
  double total_wall_clock_seconds = 0.0;
};

struct ExperimentReport {
  std::uint64_t dataset_fingerprint = 0;
  std::size_t n_queries = 0;
  MetricConfig metric;
  int n_folds = 0;
  int repeats = 0;
  std::uint64_t master_seed = 0;
  std::string seed_scheme;
  TrainConfig train;
  NtnTrainConfig ntn;
  std::vector<MethodReport> methods;
  double total_wall_clock_seconds = 0.0;

  const MethodReport* find(std::string_view name) const;
};

/// Mean of evaluate_ranking over the dataset, ranking each query by greedy
/// decoding of length min(max cutoff, M).
std::map<std::string, double> evaluate_policy(const Dataset& dataset, const PolicyParams& params,
                                              const MetricConfig& metric);

ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config);

/// Fills mean/stddev/totals of `method` from its trials.
void aggregate(MethodReport& method);

/// Machine-independent content only: wall-clock values and traces are left
/// out so that equal inputs give byte-identical text.
std::string report_to_json(const ExperimentReport& report);
/// Wall-clock totals per method and trial.
std::string timing_to_json(const ExperimentReport& report);
/// One CSV per method: fold,repeat followed by the trace columns.
void write_method_traces_csv(const MethodReport& method, std::ostream& out);

struct TargetHit {
  int iteration = 0;
  double wall_clock_seconds = 0.0;
  long long eval_count = 0;
};

/// First record whose validation alpha-NDCG@10 reaches `target`.
std::optional<TargetHit> time_to_target(const ConvergenceTrace& trace, double target);

struct ComparisonRow {
  std::string method;
  std::map<std::string, double> final_metrics;
  double per_episode_eval_count = 0.0;
  double per_episode_eval_ratio = 0.0;
  int trials_reaching_target = 0;
  int trials = 0;
  /// Mean over trials; absent unless every trial reached the target.
  std::optional<double> mean_iterations_to_target;
  std::optional<double> mean_seconds_to_target;
  std::optional<double> mean_evals_to_target;
  /// Relative to the reference method; absent if either side never reached.
  std::optional<double> time_to_target_ratio;
  std::optional<double> evals_to_target_ratio;
};

struct ComparisonTable {
  double target = 0.0;
  std::string reference;
  std::vector<ComparisonRow> rows;
};

/// Reference is the "baseline" method when present, else the first one.
/// Throws ArgumentError if the reports disagree on dataset, folds or metric
/// config.
ComparisonTable compare_strategies(std::span<const ExperimentReport> reports, double target);
std::string comparison_to_json(const ComparisonTable& table);
void write_comparison_text(const ComparisonTable& table, std::ostream& out);

}  // namespace divrank

#endif  // DIVRANK_HARNESS_HPP
