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

#include "divrank/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "divrank/error.hpp"

namespace divrank {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string with_fraction(const char* name, double f) {
  std::ostringstream os;
  os << name << '(' << f << ')';
  return os.str();
}

}  // namespace

std::string strategy_name(const SamplingStrategy& strategy) {
  return std::visit(overloaded{
                        [](const Baseline&) { return std::string("baseline"); },
                        [](const Knn& s) { return with_fraction("knn", s.discard_fraction); },
                        [](const NtnD& s) { return with_fraction("ntn-d", s.keep_fraction); },
                        [](const NtnE& s) { return with_fraction("ntn-e", s.keep_fraction); },
                    },
                    strategy);
}

void validate(const SamplingStrategy& strategy) {
  std::visit(overloaded{
                 [](const Baseline&) {},
                 [](const Knn& s) {
                   if (!(s.discard_fraction > 0.0 && s.discard_fraction < 1.0)) {
                     throw ArgumentError("kNN discard fraction must lie in (0, 1)");
                   }
                 },
                 [](const auto& s) {
                   if (!(s.keep_fraction > 0.0 && s.keep_fraction <= 1.0)) {
                     throw ArgumentError("NTN keep fraction must lie in (0, 1]");
                   }
                   if (!s.ntn) throw ArgumentError("NTN strategy needs pretrained parameters");
                 },
             },
             strategy);
}

int fraction_floor(double fraction, std::size_t n) {
  return static_cast<int>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

int fraction_ceil(double fraction, std::size_t n) {
  return static_cast<int>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

std::vector<int> knn_discard(int anchor, std::span<const int> remaining,
                             const QueryInstance& instance, int k) {
  if (std::find(remaining.begin(), remaining.end(), anchor) != remaining.end()) {
    throw ArgumentError("kNN anchor must not be a remaining candidate");
  }
  if (k < 0) throw ArgumentError("k must be nonnegative");
  k = std::min<int>(k, static_cast<int>(remaining.size()));
  if (k == 0) return {};

  const Vector& a = instance.embedding(anchor);
  std::vector<std::pair<double, int>> dist;
  dist.reserve(remaining.size());
  for (int d : remaining) dist.emplace_back((instance.embedding(d) - a).squaredNorm(), d);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<int> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(dist[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> initial_candidates(const SamplingStrategy& strategy,
                                    const QueryInstance& instance) {
  validate(strategy);
  const int m = instance.size();
  if (const auto* s = std::get_if<NtnD>(&strategy)) {
    const int keep = std::clamp(fraction_ceil(s->keep_fraction, m), std::min(m, 1), m);
    Ranking top = ntn_rank(instance, *s->ntn, keep);
    std::sort(top.begin(), top.end());
    return top;
  }
  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

Episode sample_episode(const SamplingStrategy& strategy, const PolicyParams& params,
                       const QueryInstance& instance, double alpha, int m, RngStream& rng) {
  if (m < 1) throw ArgumentError("episode length must be at least 1");
  return sample_episode(strategy, params, instance, alpha, m, rng,
                        initial_candidates(strategy, instance));
}

namespace {

int draw(const Vector& probs, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void erase_sorted(std::vector<int>& from, const std::vector<int>& drop) {
  std::vector<int> kept;
  kept.reserve(from.size());
  std::set_difference(from.begin(), from.end(), drop.begin(), drop.end(),
                      std::back_inserter(kept));
  from = std::move(kept);
}

}  // namespace

Episode sample_episode(const SamplingStrategy& strategy, const PolicyParams& params,
                       const QueryInstance& instance, double alpha, int m, RngStream& rng,
                       std::vector<int> candidates) {
  if (m < 1) throw ArgumentError("episode length must be at least 1");
  if (instance.size() < 1) throw ArgumentError("instance has no documents");
  validate(strategy);

  Episode episode;
  RankingState state = init_state(instance, params, std::move(candidates));
  const int length = std::min<int>(m, static_cast<int>(state.remaining.size()));
  episode.steps.reserve(length);

  const auto* per_step_ntn = std::get_if<NtnE>(&strategy);
  Matrix ntn_feat;
  std::optional<IncrementalNtnScorer> ntn_scorer;
  if (per_step_ntn != nullptr) {
    ntn_feat = ntn_features(instance);
    ntn_scorer.emplace(*per_step_ntn->ntn, ntn_feat);
  }

  for (int t = 0; t < length; ++t) {
    const std::size_t before = state.remaining.size();
    const Vector probs = policy_probs(state, instance, params);
    episode.evaluation_count += static_cast<long long>(before);
    const int action = state.remaining[draw(probs, rng)];
    const double r = reward(state, action, instance, alpha);
    RankingState next = transition(state, action, instance, params);
    episode.steps.push_back({std::move(state), action, r});

    const int must_keep = length - t - 1;
    const int spare = static_cast<int>(next.remaining.size()) - must_keep;
    if (must_keep > 0) {
      if (const auto* knn = std::get_if<Knn>(&strategy)) {
        const int k = std::min(fraction_floor(knn->discard_fraction, before), spare);
        if (k > 0) erase_sorted(next.remaining, knn_discard(action, next.remaining, instance, k));
      } else if (per_step_ntn != nullptr) {
        ntn_scorer->add_selected(action, next.remaining);
        episode.ntn_evaluation_count += static_cast<long long>(next.remaining.size());
        const int keep = std::max(fraction_ceil(per_step_ntn->keep_fraction, next.remaining.size()),
                                  must_keep);
        if (keep < static_cast<int>(next.remaining.size())) {
          std::vector<std::pair<double, int>> ranked;
          ranked.reserve(next.remaining.size());
          for (int d : next.remaining) ranked.emplace_back(-ntn_scorer->score(d), d);
          std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end());
          std::vector<int> kept;
          kept.reserve(keep);
          for (int i = 0; i < keep; ++i) kept.push_back(ranked[i].second);
          std::sort(kept.begin(), kept.end());
          next.remaining = std::move(kept);
        }
      }
    }
    state = std::move(next);
  }
  return episode;
}

}  // namespace divrank
