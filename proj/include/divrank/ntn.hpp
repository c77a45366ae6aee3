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

// Neural tensor network diversity scorer:
//
//   f(v, S) = omega' v + mu' max_cols tanh(v' W[1:z] [v_1 ... v_|S|])
//
// The max runs per slice over the selected documents. With S empty the
// novelty term is zero.

#ifndef DIVRANK_NTN_HPP
#define DIVRANK_NTN_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "divrank/corpus.hpp"
#include "divrank/metrics.hpp"

namespace divrank {

struct NtnParams {
  Vector omega;               // d
  Vector mu;                  // z
  std::vector<Matrix> slices; // z slices, each d x d

  int dimension() const { return static_cast<int>(omega.size()); }
  int slice_count() const { return static_cast<int>(mu.size()); }

  static NtnParams zeros(int dimension, int slices);
  void validate() const;
  bool operator==(const NtnParams& other) const;
};

struct NtnTrainConfig {
  double learning_rate = 0.009;
  int epochs = 20;
  int slices = 100;
  /// Target-ranking positions that contribute likelihood terms.
  int list_length = 10;
  double alpha = 0.5;
  double init_scale = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// `selected` holds one document representation per column, d x |S|.
double ntn_score(const Vector& v, const Matrix& selected, const NtnParams& params);

/// Per-document scorer inputs for an instance, d x M. Column i is the
/// query-conditioned embedding q (.) x_i scaled by sqrt(d), so the relevance
/// term can express query-document similarity.
Matrix ntn_features(const QueryInstance& instance);

/// Scores a fixed pool of documents against a growing selected set. Each
/// add_selected() folds one more column into the per-slice running maxima
/// of the listed candidates, so only documents passed to every call since
/// construction have an up-to-date score.
class IncrementalNtnScorer {
 public:
  IncrementalNtnScorer(const NtnParams& params, const Matrix& features);

  void add_selected(int doc, std::span<const int> candidates);
  double score(int doc) const;

  int selected_count() const { return static_cast<int>(selected_.size()); }
  const std::vector<int>& selected() const { return selected_; }
  /// Per-slice maximum of v' W_k v_s and the position in selected() that
  /// attains it.
  double slice_max(int doc, int slice) const { return maxima_(slice, doc); }
  int slice_argmax(int doc, int slice) const { return argmax_(slice, doc); }

 private:
  const NtnParams& params_;
  const Matrix& features_;
  Vector relevance_;
  Matrix maxima_;
  Eigen::MatrixXi argmax_;
  std::vector<int> selected_;
};

/// Greedy selection by ntn_score; ties go to the lowest index.
Ranking ntn_rank(const QueryInstance& instance, const NtnParams& params, int length);

struct NtnGradient {
  Vector omega;
  Vector mu;
  std::vector<Matrix> slices;
};

/// Negative log-likelihood of choosing `target[t]` by softmax over the
/// documents not yet in target[0..t), summed over the first `positions`
/// entries. Fills `gradient` (w.r.t. the loss) when non-null.
double ntn_sequence_loss(const Matrix& features, std::span<const int> target,
                         int positions, const NtnParams& params,
                         NtnGradient* gradient = nullptr);

NtnParams ntn_initialize(int dimension, const NtnTrainConfig& config);

/// Stochastic gradient descent on ntn_sequence_loss against greedy-ideal
/// target rankings, one update per query, queries shuffled each epoch.
NtnParams ntn_pretrain(const Dataset& train, const NtnTrainConfig& config);

std::string ntn_to_json(const NtnParams& params);
NtnParams ntn_from_json(const std::string& text);
void save_ntn(const NtnParams& params, const std::filesystem::path& path);
NtnParams load_ntn(const std::filesystem::path& path);

}  // namespace divrank

#endif  // DIVRANK_NTN_HPP
