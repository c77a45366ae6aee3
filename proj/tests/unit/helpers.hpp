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

// Fixtures and naive reference implementations shared by the unit tests.
// The references are written straight from the metric definitions and do
// not call into the library.

#ifndef DIVRANK_TESTS_HELPERS_HPP
#define DIVRANK_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "divrank/corpus.hpp"
#include "divrank/random.hpp"

namespace divrank::testing {

inline JudgmentMatrix judgments(const std::vector<std::vector<int>>& rows) {
  const int cols = rows.empty() ? 1 : static_cast<int>(rows.front().size());
  JudgmentMatrix j(static_cast<int>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < cols; ++c) j.set(static_cast<int>(r), c, rows[r][c] != 0);
  }
  return j;
}

inline JudgmentMatrix random_judgments(int m, int t, RngStream& rng, double density = 0.4) {
  JudgmentMatrix j(m, t);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < t; ++c) j.set(r, c, rng.uniform() < density);
  }
  return j;
}

/// Instance with explicit embeddings; query embedding and labels optional.
inline QueryInstance make_instance(const std::vector<std::vector<double>>& docs,
                                   std::vector<double> query = {},
                                   std::vector<std::vector<int>> labels = {}) {
  const int d = static_cast<int>(docs.front().size());
  if (query.empty()) query.assign(d, 0.0);
  if (labels.empty()) labels.assign(docs.size(), std::vector<int>{0});
  QueryInstance inst;
  inst.query.id = "q";
  inst.query.embedding = Eigen::Map<const Vector>(query.data(), d);
  inst.query.subtopic_count = static_cast<int>(labels.front().size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    inst.documents.push_back({"d" + std::to_string(i), Eigen::Map<const Vector>(docs[i].data(), d)});
  }
  inst.judgments = judgments(labels);
  return inst;
}

/// Random instance: Gaussian embeddings, random labels.
inline QueryInstance random_instance(int m, int d, int t, RngStream& rng) {
  QueryInstance inst;
  inst.query.id = "q";
  inst.query.embedding = Vector(d);
  for (int k = 0; k < d; ++k) inst.query.embedding[k] = rng.normal();
  inst.query.subtopic_count = t;
  for (int i = 0; i < m; ++i) {
    Vector x(d);
    for (int k = 0; k < d; ++k) x[k] = rng.normal();
    inst.documents.push_back({"d" + std::to_string(i), x});
  }
  inst.judgments = random_judgments(m, t, rng);
  return inst;
}

// --- reference metrics ------------------------------------------------------

inline double ref_alpha_dcg(const std::vector<int>& ranking, const JudgmentMatrix& j,
                            double alpha, int cutoff) {
  std::vector<int> seen(j.cols(), 0);
  double total = 0.0;
  for (int r = 0; r < static_cast<int>(ranking.size()) && r < cutoff; ++r) {
    double gain = 0.0;
    for (int i = 0; i < j.cols(); ++i) {
      if (j(ranking[r], i)) {
        gain += std::pow(1.0 - alpha, seen[i]);
        ++seen[i];
      }
    }
    total += gain / std::log2(2.0 + r);
  }
  return total;
}

inline double ref_err_ia(const std::vector<int>& ranking, const JudgmentMatrix& j, int cutoff) {
  double total = 0.0;
  for (int i = 0; i < j.cols(); ++i) {
    double not_stopped = 1.0;
    double err = 0.0;
    for (int r = 0; r < static_cast<int>(ranking.size()) && r < cutoff; ++r) {
      const double p = j(ranking[r], i) ? 0.5 : 0.0;
      err += not_stopped * p / (r + 1.0);
      not_stopped *= 1.0 - p;
    }
    total += err;
  }
  return total / j.cols();
}

/// Best alpha-DCG over all orderings of every size-min(cutoff, M) subset.
inline double brute_force_ideal(const JudgmentMatrix& j, double alpha, int cutoff) {
  std::vector<int> perm(j.rows());
  for (int i = 0; i < j.rows(); ++i) perm[i] = i;
  double best = 0.0;
  do {
    best = std::max(best, ref_alpha_dcg(perm, j, alpha, cutoff));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace divrank::testing

#endif  // DIVRANK_TESTS_HELPERS_HPP
