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

// Episode generation. All strategies draw actions from the same softmax
// policy; they differ only in how the action space shrinks:
//
//   Baseline  no pruning
//   Knn       after each step drop the k nearest neighbours of the action
//   NtnD      restrict the whole episode to the NTN ranker's top list
//   NtnE      after each step keep only the NTN ranker's top candidates

#ifndef DIVRANK_SAMPLING_HPP
#define DIVRANK_SAMPLING_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "divrank/mdp.hpp"
#include "divrank/ntn.hpp"
#include "divrank/random.hpp"

namespace divrank {

struct Baseline {};

struct Knn {
  double discard_fraction = 0.3;  // in (0, 1)
};

struct NtnD {
  double keep_fraction = 0.5;  // in (0, 1]
  std::shared_ptr<const NtnParams> ntn;
};

struct NtnE {
  double keep_fraction = 0.5;  // in (0, 1]
  std::shared_ptr<const NtnParams> ntn;
};

using SamplingStrategy = std::variant<Baseline, Knn, NtnD, NtnE>;

/// "baseline", "knn(0.3)", "ntn-d(0.5)", "ntn-e(0.5)".
std::string strategy_name(const SamplingStrategy& strategy);
void validate(const SamplingStrategy& strategy);

/// floor(f * n) and ceil(f * n), immune to representation error such as
/// 0.3 * 100 landing a hair above 30.
int fraction_floor(double fraction, std::size_t n);
int fraction_ceil(double fraction, std::size_t n);

/// The k members of `remaining` closest to `anchor` in Euclidean distance,
/// ties to the lower index, returned in ascending index order. k is clamped
/// to |remaining|.
std::vector<int> knn_discard(int anchor, std::span<const int> remaining,
                             const QueryInstance& instance, int k);

/// Action space at step 0: every document, or the NTN top list for NtnD.
/// Cache it when sampling the same instance repeatedly.
std::vector<int> initial_candidates(const SamplingStrategy& strategy,
                                    const QueryInstance& instance);

/// Samples min(m, |initial action space|) actions. Throws ArgumentError when
/// m < 1 or the instance is empty.
Episode sample_episode(const SamplingStrategy& strategy, const PolicyParams& params,
                       const QueryInstance& instance, double alpha, int m, RngStream& rng);
Episode sample_episode(const SamplingStrategy& strategy, const PolicyParams& params,
                       const QueryInstance& instance, double alpha, int m, RngStream& rng,
                       std::vector<int> candidates);

}  // namespace divrank

#endif  // DIVRANK_SAMPLING_HPP
