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

#include <doctest.h>

#include <cmath>
#include <set>

#include "divrank/error.hpp"
#include "divrank/metrics.hpp"
#include "divrank/sampling.hpp"
#include "helpers.hpp"

using namespace divrank;
using namespace divrank::testing;

namespace {

// Remaining-set sizes of the kNN recurrence |A_{t+1}| = |A_t| - 1 - k_t with
// k_t = floor(f |A_t|), truncated to keep L - t - 1 candidates. Integer
// arithmetic on f given in percent avoids floating-point rounding.
std::vector<int> knn_sizes(int m_docs, int m, int percent) {
  std::vector<int> sizes;
  int a = m_docs;
  const int length = std::min(m, m_docs);
  for (int t = 0; t < length; ++t) {
    sizes.push_back(a);
    const int after = a - 1;
    const int keep = length - t - 1;
    const int k = std::min(percent * a / 100, std::max(0, after - keep));
    a = after - (keep > 0 ? k : 0);
  }
  return sizes;
}

int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

std::shared_ptr<const NtnParams> random_ntn(int d, int z, RngStream& rng) {
  auto p = NtnParams::zeros(d, z);
  p.omega = Vector::Random(d);
  p.mu = Vector::Random(z);
  for (auto& w : p.slices) w = Matrix::Random(d, d);
  (void)rng;
  return std::make_shared<const NtnParams>(p);
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("fraction rounding") {
    CHECK(fraction_floor(0.3, 100) == 30);
    CHECK(fraction_floor(0.1, 10) == 1);
    CHECK(fraction_floor(0.3, 69) == 20);
    CHECK(fraction_ceil(0.3, 100) == 30);
    CHECK(fraction_ceil(0.5, 99) == 50);
    CHECK(fraction_ceil(0.7, 10) == 7);
  }

  TEST_CASE("kNN discard") {
    const auto inst = make_instance({{0.0}, {1.0}, {10.0}, {-1.0}, {2.0}});
    CHECK(knn_discard(0, std::vector<int>{1, 2}, inst, 0).empty());
    CHECK(knn_discard(0, std::vector<int>{1, 2}, inst, 1) == std::vector<int>{1});
    CHECK(knn_discard(0, std::vector<int>{1, 2}, inst, 2) == std::vector<int>{1, 2});
    CHECK(knn_discard(0, std::vector<int>{1, 2}, inst, 9) == std::vector<int>{1, 2});
    // Equidistant neighbours: lower index wins.
    CHECK(knn_discard(0, std::vector<int>{1, 2, 3}, inst, 1) == std::vector<int>{1});
    CHECK(knn_discard(0, std::vector<int>{1, 2, 3, 4}, inst, 3) == std::vector<int>{1, 3, 4});
    CHECK_THROWS_AS(knn_discard(1, std::vector<int>{1, 2}, inst, 1), ArgumentError);
  }

  TEST_CASE("evaluation counts at M = 100, m = 10") {
    RngStream rng(1);
    const auto inst = random_instance(100, 4, 3, rng);
    const auto p = PolicyParams::random(4, 4, rng);
    RngStream draw(2);
    const Episode base = sample_episode(Baseline{}, p, inst, 0.5, 10, draw);
    CHECK(base.length() == 10);
    CHECK(base.evaluation_count == 955);
    CHECK(base.evaluation_count == 10 * 100 - 10 * 9 / 2);

    const Episode knn = sample_episode(Knn{0.3}, p, inst, 0.5, 10, draw);
    std::vector<int> sizes;
    for (const auto& s : knn.steps) sizes.push_back(static_cast<int>(s.state.remaining.size()));
    CHECK(sizes == std::vector<int>{100, 69, 48, 33, 23, 16, 11, 7, 4, 2});
    CHECK(sizes == knn_sizes(100, 10, 30));
    CHECK(knn.evaluation_count == 313);
    CHECK(knn.evaluation_count == sum(knn_sizes(100, 10, 30)));
    for (int percent : {10, 20}) {
      const Episode e = sample_episode(Knn{percent / 100.0}, p, inst, 0.5, 10, draw);
      CHECK(e.evaluation_count == sum(knn_sizes(100, 10, percent)));
      CHECK(e.evaluation_count < base.evaluation_count);
    }
  }

  TEST_CASE("kNN with M = m still yields full episodes") {
    RngStream rng(3);
    for (int m : {1, 2, 5, 10}) {
      const auto inst = random_instance(m, 3, 2, rng);
      const auto p = PolicyParams::random(3, 3, rng);
      for (double f : {0.1, 0.5, 0.9}) {
        const Episode e = sample_episode(Knn{f}, p, inst, 0.5, m, rng);
        CHECK(e.length() == m);
        const auto acts = e.actions();
        CHECK(std::set<int>(acts.begin(), acts.end()).size() == static_cast<std::size_t>(m));
      }
    }
  }

  TEST_CASE("episode invariants across strategies") {
    RngStream rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = random_instance(30, 4, 3, rng);
      const auto p = PolicyParams::random(4, 3, rng);
      const auto ntn = random_ntn(4, 3, rng);
      const std::vector<SamplingStrategy> strategies{Baseline{}, Knn{0.2}, NtnD{0.5, ntn},
                                                     NtnE{0.5, ntn}};
      for (const auto& strategy : strategies) {
        const Episode e = sample_episode(strategy, p, inst, 0.5, 10, rng);
        REQUIRE(e.length() == 10);
        std::set<int> dropped;
        long long count = 0;
        double total = 0.0;
        for (int t = 0; t < e.length(); ++t) {
          const auto& st = e.steps[t].state;
          count += static_cast<long long>(st.remaining.size());
          total += e.steps[t].reward;
          CHECK(std::find(st.remaining.begin(), st.remaining.end(), e.steps[t].action) !=
                st.remaining.end());
          CHECK(std::is_sorted(st.remaining.begin(), st.remaining.end()));
          CHECK(static_cast<int>(st.remaining.size()) >= e.length() - t);
          for (int d : st.remaining) CHECK(dropped.count(d) == 0);  // no resurrection
          if (t + 1 < e.length()) {
            const auto& next = e.steps[t + 1].state.remaining;
            for (int d : st.remaining) {
              if (d != e.steps[t].action &&
                  std::find(next.begin(), next.end(), d) == next.end()) {
                dropped.insert(d);
              }
            }
          }
        }
        CHECK(e.evaluation_count == count);
        CHECK(std::abs(total - alpha_dcg(e.actions(), inst.judgments, 0.5, 10)) < 1e-12);
        if (std::holds_alternative<NtnE>(strategy)) {
          CHECK(e.ntn_evaluation_count > 0);
        } else {
          CHECK(e.ntn_evaluation_count == 0);
        }
        if (!std::holds_alternative<Baseline>(strategy)) CHECK(count < 255);
      }
    }
  }

  TEST_CASE("NTN prefilter restricts the action space") {
    RngStream rng(5);
    const auto inst = random_instance(100, 4, 3, rng);
    const auto p = PolicyParams::random(4, 4, rng);
    const auto ntn = random_ntn(4, 2, rng);
    const Episode e = sample_episode(NtnD{0.5, ntn}, p, inst, 0.5, 10, rng);
    CHECK(e.steps[0].state.remaining.size() == 50u);
    Ranking top = ntn_rank(inst, *ntn, 50);
    std::sort(top.begin(), top.end());
    CHECK(e.steps[0].state.remaining == top);
    CHECK(initial_candidates(NtnD{0.5, ntn}, inst) == top);
    CHECK(e.evaluation_count == 10 * 50 - 45);
  }

  TEST_CASE("NTN per-step filter keeps the top scored candidates") {
    RngStream rng(6);
    const auto inst = random_instance(40, 3, 3, rng);
    const auto p = PolicyParams::random(3, 3, rng);
    const auto ntn = random_ntn(3, 2, rng);
    const Episode e = sample_episode(NtnE{0.5, ntn}, p, inst, 0.5, 6, rng);
    const Matrix f = ntn_features(inst);
    for (int t = 0; t + 1 < e.length(); ++t) {
      const auto& before = e.steps[t].state.remaining;
      const auto& after = e.steps[t + 1].state.remaining;
      std::vector<int> pool;
      for (int d : before) {
        if (d != e.steps[t].action) pool.push_back(d);
      }
      const int keep = std::max(fraction_ceil(0.5, pool.size()), e.length() - t - 1);
      CHECK(after.size() == static_cast<std::size_t>(std::min<int>(keep, pool.size())));
      // Score every pool member directly against the selected prefix.
      Matrix sel(3, t + 1);
      for (int c = 0; c <= t; ++c) sel.col(c) = f.col(e.steps[c].action);
      std::vector<std::pair<double, int>> scored;
      for (int d : pool) scored.emplace_back(-ntn_score(f.col(d), sel, *ntn), d);
      std::sort(scored.begin(), scored.end());
      std::vector<int> want;
      for (std::size_t i = 0; i < after.size(); ++i) want.push_back(scored[i].second);
      std::sort(want.begin(), want.end());
      CHECK(after == want);
    }
  }

  TEST_CASE("determinism") {
    RngStream rng(7);
    const auto inst = random_instance(25, 3, 2, rng);
    const auto p = PolicyParams::random(3, 3, rng);
    for (const SamplingStrategy& s : {SamplingStrategy{Baseline{}}, SamplingStrategy{Knn{0.3}}}) {
      RngStream a(99), b(99);
      const Episode x = sample_episode(s, p, inst, 0.5, 8, a);
      const Episode y = sample_episode(s, p, inst, 0.5, 8, b);
      CHECK(x.actions() == y.actions());
      CHECK(x.rewards() == y.rewards());
      CHECK(x.evaluation_count == y.evaluation_count);
    }
  }

  TEST_CASE("first-action frequencies follow the policy") {
    const auto inst = make_instance({{1.0, 0.0}, {0.0, 1.0}, {-0.5, 0.5}}, {0.3, 0.8});
    auto p = PolicyParams::zeros(2, 2);
    p.U << 1.5, -0.4, 0.2, 0.9;
    p.V << 1.0, 0.5, -0.3, 1.2;
    const Vector probs = policy_probs(init_state(inst, p), inst, p);
    const int n = 100000;
    std::vector<int> counts(3, 0);
    RngStream rng(2024);
    for (int i = 0; i < n; ++i) {
      ++counts[sample_episode(Baseline{}, p, inst, 0.5, 1, rng).steps[0].action];
    }
    for (int i = 0; i < 3; ++i) {
      const double se = std::sqrt(probs[i] * (1.0 - probs[i]) / n);
      CHECK(std::abs(counts[i] / static_cast<double>(n) - probs[i]) < 3.0 * se);
    }
  }

  TEST_CASE("argument and strategy validation") {
    RngStream rng(8);
    const auto inst = random_instance(5, 2, 2, rng);
    const auto p = PolicyParams::random(2, 2, rng);
    CHECK_THROWS_AS(sample_episode(Baseline{}, p, inst, 0.5, 0, rng), ArgumentError);
    CHECK_THROWS_AS(sample_episode(Knn{0.0}, p, inst, 0.5, 3, rng), ArgumentError);
    CHECK_THROWS_AS(sample_episode(Knn{1.0}, p, inst, 0.5, 3, rng), ArgumentError);
    CHECK_THROWS_AS(sample_episode(NtnE{0.5, nullptr}, p, inst, 0.5, 3, rng), ArgumentError);
    CHECK_THROWS_AS(sample_episode(NtnD{1.5, random_ntn(2, 1, rng)}, p, inst, 0.5, 3, rng),
                    ArgumentError);
    CHECK(strategy_name(Knn{0.3}) == "knn(0.3)");
    CHECK(strategy_name(NtnE{0.5, nullptr}) == "ntn-e(0.5)");
    // m larger than M gives an M-step episode.
    CHECK(sample_episode(Baseline{}, p, inst, 0.5, 9, rng).length() == 5);
  }
}
