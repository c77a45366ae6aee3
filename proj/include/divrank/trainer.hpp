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

// REINFORCE training of the ranking policy.

#ifndef DIVRANK_TRAINER_HPP
#define DIVRANK_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "divrank/corpus.hpp"
#include "divrank/mdp.hpp"
#include "divrank/metrics.hpp"
#include "divrank/sampling.hpp"

namespace divrank {

struct ConvergenceRule {
  /// Stop after this many consecutive iterations without an improvement of
  /// at least min_delta over the best validation score.
  int patience = 500;
  double min_delta = 1e-4;
};

struct TrainConfig {
  double eta = 0.001;
  double gamma = 1.0;
  int m = 10;
  /// 0 means "same as the embedding dimension".
  int hidden_dim = 0;
  int max_iterations = 2000;
  ConvergenceRule convergence;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  SamplingStrategy strategy = Baseline{};

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  double wall_clock_seconds = 0.0;
  long long eval_count = 0;
  double val_alpha_ndcg_10 = 0.0;
  double train_mean_return = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
};

/// Header: iteration,wall_clock_seconds,eval_count,val_alpha_ndcg_10,train_mean_return
void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out);

/// G_t = sum_{k=0}^{L-1-t} gamma^k r_{t+k+1}.
std::vector<double> compute_returns(const Episode& episode, double gamma);

struct PolicyGradient {
  Matrix dU;
  Matrix dV;
  Matrix dW;
};

/// sum_t gamma^t G_t grad log pi(a_t | s_t), with the returns held fixed and
/// the utility recurrence differentiated through every step. The forward
/// pass is recomputed from `params` using the episode's actions and action
/// sets.
PolicyGradient policy_gradient(const Episode& episode, const QueryInstance& instance,
                               const PolicyParams& params, double gamma);

/// sum_t gamma^t G_t log pi(a_t | s_t) for fixed returns; the quantity
/// policy_gradient differentiates.
double surrogate_objective(const Episode& episode, const QueryInstance& instance,
                           const PolicyParams& params, double gamma);

void apply_gradient(PolicyParams& params, const PolicyGradient& gradient, double eta);

/// Deterministic ranking: argmax of the policy (lowest index on ties) for
/// min(m, M) steps, no pruning.
Ranking greedy_decode(const QueryInstance& instance, const PolicyParams& params, int m);

struct TrainResult {
  PolicyParams params;
  ConvergenceTrace trace;
  /// Iteration whose parameters were returned (0 = initialization).
  int best_iteration = 0;
  double best_validation = 0.0;
  long long episodes = 0;
  long long eval_count = 0;
  long long ntn_eval_count = 0;
};

/// Initializes parameters uniformly in [-1, 1], then runs iterations that
/// each sample one episode per training query (shuffled order) and apply
/// the update. After every iteration the validation alpha-NDCG@10 of greedy
/// decoding is recorded. Returns the parameters of the best validation
/// iteration.
TrainResult train(const Dataset& train_set, const Dataset& validation_set,
                  const TrainConfig& config);

/// Mean alpha-NDCG@10 of greedy-decoded rankings over a dataset.
double mean_alpha_ndcg_10(const Dataset& dataset, const PolicyParams& params, double alpha);

}  // namespace divrank

#endif  // DIVRANK_TRAINER_HPP
