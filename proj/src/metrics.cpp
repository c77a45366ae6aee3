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

#include "divrank/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "divrank/error.hpp"

namespace divrank {

void MetricConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in [0, 1)");
  if (cutoffs.empty()) throw ArgumentError("at least one cutoff is required");
  for (int k : cutoffs) {
    if (k < 1) throw ArgumentError("cutoffs must be positive");
  }
}

double novelty_gain(const JudgmentMatrix& judgments, int doc,
                    std::span<const int> coverage, double alpha) {
  double gain = 0.0;
  for (int i = 0; i < judgments.cols(); ++i) {
    if (judgments(doc, i)) gain += std::pow(1.0 - alpha, coverage[i]);
  }
  return gain;
}

void check_ranking(std::span<const int> ranking, const JudgmentMatrix& judgments) {
  std::vector<bool> seen(judgments.rows(), false);
  for (int d : ranking) {
    if (d < 0 || d >= judgments.rows()) {
      throw ArgumentError("ranking index " + std::to_string(d) + " out of range [0, " +
                          std::to_string(judgments.rows()) + ")");
    }
    if (seen[d]) throw ArgumentError("ranking repeats document " + std::to_string(d));
    seen[d] = true;
  }
}

namespace {

void check_cutoff(int cutoff) {
  if (cutoff < 1) throw ArgumentError("cutoff must be at least 1");
}

// Assumes the ranking was already checked.
double alpha_dcg_unchecked(std::span<const int> ranking, const JudgmentMatrix& judgments,
                           double alpha, int cutoff) {
  std::vector<int> coverage(judgments.cols(), 0);
  const std::size_t depth = std::min<std::size_t>(cutoff, ranking.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    const int doc = ranking[r];
    dcg += novelty_gain(judgments, doc, coverage, alpha) / std::log2(r + 2.0);
    for (int i = 0; i < judgments.cols(); ++i) coverage[i] += judgments(doc, i) ? 1 : 0;
  }
  return dcg;
}

}  // namespace

double alpha_dcg(std::span<const int> ranking, const JudgmentMatrix& judgments,
                 double alpha, int cutoff) {
  check_cutoff(cutoff);
  check_ranking(ranking, judgments);
  return alpha_dcg_unchecked(ranking, judgments, alpha, cutoff);
}

Ranking greedy_ideal_ranking(const JudgmentMatrix& judgments, double alpha, int length) {
  const int m = judgments.rows();
  const int depth = std::clamp(length, 0, m);
  std::vector<int> coverage(judgments.cols(), 0);
  std::vector<bool> used(m, false);
  Ranking ranking;
  ranking.reserve(depth);
  for (int r = 0; r < depth; ++r) {
    int best = -1;
    double best_gain = -1.0;
    for (int d = 0; d < m; ++d) {
      if (used[d]) continue;
      const double g = novelty_gain(judgments, d, coverage, alpha);
      if (g > best_gain) {
        best_gain = g;
        best = d;
      }
    }
    used[best] = true;
    ranking.push_back(best);
    for (int i = 0; i < judgments.cols(); ++i) coverage[i] += judgments(best, i) ? 1 : 0;
  }
  return ranking;
}

double ideal_alpha_dcg(const JudgmentMatrix& judgments, double alpha, int cutoff) {
  check_cutoff(cutoff);
  const Ranking ideal = greedy_ideal_ranking(judgments, alpha, cutoff);
  return alpha_dcg_unchecked(ideal, judgments, alpha, cutoff);
}

double alpha_ndcg(std::span<const int> ranking, const JudgmentMatrix& judgments,
                  double alpha, int cutoff) {
  const double dcg = alpha_dcg(ranking, judgments, alpha, cutoff);
  const double ideal = ideal_alpha_dcg(judgments, alpha, cutoff);
  return ideal > 0.0 ? dcg / ideal : 0.0;
}

double err_ia(std::span<const int> ranking, const JudgmentMatrix& judgments, int cutoff) {
  check_cutoff(cutoff);
  check_ranking(ranking, judgments);
  const int t = judgments.cols();
  if (t == 0) return 0.0;
  const std::size_t depth = std::min<std::size_t>(cutoff, ranking.size());
  double total = 0.0;
  for (int i = 0; i < t; ++i) {
    // Binary grade g maps to stopping probability (2^g - 1) / 2^1.
    double not_stopped = 1.0;
    double err = 0.0;
    for (std::size_t r = 0; r < depth; ++r) {
      const double stop = judgments(ranking[r], i) ? 0.5 : 0.0;
      err += not_stopped * stop / static_cast<double>(r + 1);
      not_stopped *= 1.0 - stop;
    }
    total += err;
  }
  return total / t;
}

double s_recall(std::span<const int> ranking, const JudgmentMatrix& judgments, int cutoff) {
  check_cutoff(cutoff);
  check_ranking(ranking, judgments);
  const int t = judgments.cols();
  if (t == 0) return 0.0;
  std::vector<bool> covered(t, false);
  const std::size_t depth = std::min<std::size_t>(cutoff, ranking.size());
  for (std::size_t r = 0; r < depth; ++r) {
    for (int i = 0; i < t; ++i) covered[i] = covered[i] || judgments(ranking[r], i);
  }
  return static_cast<double>(std::count(covered.begin(), covered.end(), true)) / t;
}

std::map<std::string, double> evaluate_ranking(std::span<const int> ranking,
                                               const JudgmentMatrix& judgments,
                                               const MetricConfig& config) {
  config.validate();
  std::map<std::string, double> out;
  for (int k : config.cutoffs) {
    const std::string at = "@" + std::to_string(k);
    out["alpha_ndcg" + at] = alpha_ndcg(ranking, judgments, config.alpha, k);
    out["err_ia" + at] = err_ia(ranking, judgments, k);
    out["s_recall" + at] = s_recall(ranking, judgments, k);
  }
  return out;
}

}  // namespace divrank
