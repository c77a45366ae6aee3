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

// Ranking as a Markov decision process.
//
// State s_t = [selected Z_t, remaining X_t, utility h_t].
// Policy:     pi(a | s_t) = softmax_a(x_a' U h_t) over the remaining set.
// Transition: h_{t+1} = tanh(V x_{a_t} + W h_t), h_0 = tanh(V q).
// Reward:     alpha-DCG gain of the prefix extended by a_t.

#ifndef DIVRANK_MDP_HPP
#define DIVRANK_MDP_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "divrank/corpus.hpp"
#include "divrank/random.hpp"

namespace divrank {

struct PolicyParams {
  Matrix U;  // d x h, bilinear policy weight
  Matrix V;  // h x d, document-to-state map
  Matrix W;  // h x h, state-to-state map

  int dimension() const { return static_cast<int>(U.rows()); }
  int hidden_dim() const { return static_cast<int>(U.cols()); }

  static PolicyParams zeros(int dimension, int hidden_dim);
  /// Entries uniform in [-scale, scale].
  static PolicyParams random(int dimension, int hidden_dim, RngStream& rng, double scale = 1.0);

  void validate() const;
  bool all_finite() const;
  bool operator==(const PolicyParams& other) const {
    return U == other.U && V == other.V && W == other.W;
  }
};

struct RankingState {
  std::vector<int> selected;   // Z_t in rank order
  std::vector<int> remaining;  // X_t, ascending document index
  Vector h;

  int step() const { return static_cast<int>(selected.size()); }
};

struct EpisodeStep {
  RankingState state;
  int action = -1;
  double reward = 0.0;
};

struct Episode {
  std::vector<EpisodeStep> steps;
  /// Policy scorings performed while sampling.
  long long evaluation_count = 0;
  /// NTN scorings performed by the per-step filter, kept apart from the
  /// policy count.
  long long ntn_evaluation_count = 0;

  int length() const { return static_cast<int>(steps.size()); }
  std::vector<int> actions() const;
  std::vector<double> rewards() const;
};

RankingState init_state(const QueryInstance& instance, const PolicyParams& params);
/// Same, but with the action space restricted to `candidates`.
RankingState init_state(const QueryInstance& instance, const PolicyParams& params,
                        std::vector<int> candidates);

/// x_a' U h for each a in state.remaining, in that order.
Vector policy_scores(const RankingState& state, const QueryInstance& instance,
                     const PolicyParams& params);
/// Softmax of policy_scores with max-subtraction. Throws StateError when the
/// remaining set is empty.
Vector policy_probs(const RankingState& state, const QueryInstance& instance,
                    const PolicyParams& params);
Vector softmax(const Vector& scores);

RankingState transition(const RankingState& state, int action, const QueryInstance& instance,
                        const PolicyParams& params);

/// alpha-DCG of selected + [action] minus alpha-DCG of selected, both over
/// the whole prefix.
double reward(const RankingState& state, int action, const QueryInstance& instance,
              double alpha);

std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(const std::string& text);
void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace divrank

#endif  // DIVRANK_MDP_HPP
