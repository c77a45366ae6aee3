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

// Subtopic-aware evaluation measures. Conventions follow the TREC ndeval
// program: binary grades, greedy ideal ordering, uniform intent prior, log2
// discounts.

#ifndef DIVRANK_METRICS_HPP
#define DIVRANK_METRICS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "divrank/corpus.hpp"

namespace divrank {

using Ranking = std::vector<int>;

struct MetricConfig {
  double alpha = 0.5;
  std::vector<int> cutoffs{5, 10};

  void validate() const;
};

/// Marginal gain sum_i J(d, i) * (1 - alpha)^coverage[i], without the rank
/// discount. `coverage` counts previous occurrences of each subtopic.
double novelty_gain(const JudgmentMatrix& judgments, int doc,
                    std::span<const int> coverage, double alpha);

/// Throws ArgumentError on duplicates or indices outside [0, M).
void check_ranking(std::span<const int> ranking, const JudgmentMatrix& judgments);

double alpha_dcg(std::span<const int> ranking, const JudgmentMatrix& judgments,
                 double alpha, int cutoff);

/// Greedy ideal ordering of length min(length, M): each rank takes the
/// document with the largest novelty gain, lowest index on ties.
Ranking greedy_ideal_ranking(const JudgmentMatrix& judgments, double alpha, int length);
double ideal_alpha_dcg(const JudgmentMatrix& judgments, double alpha, int cutoff);

/// alpha_dcg / ideal_alpha_dcg, or 0 when the ideal is 0.
double alpha_ndcg(std::span<const int> ranking, const JudgmentMatrix& judgments,
                  double alpha, int cutoff);

double err_ia(std::span<const int> ranking, const JudgmentMatrix& judgments, int cutoff);
double s_recall(std::span<const int> ranking, const JudgmentMatrix& judgments, int cutoff);

/// Every measure at every cutoff, keyed "alpha_ndcg@10", "err_ia@5", ...
std::map<std::string, double> evaluate_ranking(std::span<const int> ranking,
                                               const JudgmentMatrix& judgments,
                                               const MetricConfig& config);

}  // namespace divrank

#endif  // DIVRANK_METRICS_HPP
