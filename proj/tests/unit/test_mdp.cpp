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

#include <json.hpp>

#include "divrank/error.hpp"
#include "divrank/mdp.hpp"
#include "divrank/metrics.hpp"
#include "helpers.hpp"

using namespace divrank;
using namespace divrank::testing;

TEST_SUITE("mdp") {
  TEST_CASE("initial state") {
    const auto inst = make_instance({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}, {0.5, -0.5});
    PolicyParams p = PolicyParams::zeros(2, 2);
    RankingState s = init_state(inst, p);
    CHECK(s.selected.empty());
    CHECK(s.remaining == std::vector<int>{0, 1, 2});
    CHECK(s.h == Vector::Zero(2));

    p.V = Matrix::Identity(2, 2);
    s = init_state(inst, p);
    CHECK(s.h[0] == doctest::Approx(0.4621).epsilon(1e-4));
    CHECK(s.h[0] == std::tanh(0.5));
    CHECK(s.h[1] == std::tanh(-0.5));

    CHECK_THROWS_AS(init_state(inst, PolicyParams::zeros(3, 2)), ArgumentError);
    const auto restricted = init_state(inst, p, {2, 0});
    CHECK(restricted.remaining == std::vector<int>{0, 2});
  }

  TEST_CASE("policy probabilities") {
    SUBCASE("single candidate") {
      const auto inst = make_instance({{1.0}}, {1.0});
      RngStream rng(1);
      const auto p = PolicyParams::random(1, 1, rng);
      CHECK(policy_probs(init_state(inst, p), inst, p)[0] == 1.0);
    }
    SUBCASE("U = 0 is uniform") {
      RngStream rng(2);
      const auto inst = random_instance(5, 3, 2, rng);
      auto p = PolicyParams::random(3, 3, rng);
      p.U.setZero();
      const Vector pr = policy_probs(init_state(inst, p), inst, p);
      for (int i = 0; i < 5; ++i) CHECK(pr[i] == doctest::Approx(0.2));
    }
    SUBCASE("scores (ln 3, 0)") {
      // d = h = 1, V = 0 gives h_0 = tanh(0) = 0; set h by hand instead.
      const auto inst = make_instance({{std::log(3.0)}, {0.0}}, {1.0});
      auto p = PolicyParams::zeros(1, 1);
      p.U(0, 0) = 1.0;
      RankingState s = init_state(inst, p);
      s.h = Vector::Ones(1);
      const Vector pr = policy_probs(s, inst, p);
      CHECK(std::abs(pr[0] - 0.75) < 1e-12);
      CHECK(std::abs(pr[1] - 0.25) < 1e-12);
    }
    SUBCASE("empty remaining set") {
      const auto inst = make_instance({{1.0}}, {1.0});
      const auto p = PolicyParams::zeros(1, 1);
      RankingState s = init_state(inst, p);
      s.remaining.clear();
      CHECK_THROWS_AS(policy_probs(s, inst, p), StateError);
    }
  }

  TEST_CASE("softmax sanity and shift invariance") {
    RngStream rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto inst = random_instance(6, 4, 2, rng);
      const auto p = PolicyParams::random(4, 3, rng, 2.0);
      const auto s = init_state(inst, p);
      const Vector scores = policy_scores(s, inst, p);
      const Vector pr = policy_probs(s, inst, p);
      CHECK(std::abs(pr.sum() - 1.0) < 1e-12);
      CHECK(pr.minCoeff() > 0.0);
      CHECK(pr.maxCoeff() <= 1.0);
      Eigen::Index a = 0, b = 0;
      pr.maxCoeff(&a);
      scores.maxCoeff(&b);
      CHECK(a == b);
      const double shift = rng.uniform(-500.0, 500.0);
      const Vector shifted = softmax((scores.array() + shift).matrix());
      CHECK((shifted - pr).cwiseAbs().maxCoeff() < 1e-12);
    }
    Vector huge(2);
    huge << 1000.0, 999.0;
    const Vector pr = softmax(huge);
    CHECK(std::isfinite(pr[0]));
    CHECK(pr[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  }

  TEST_CASE("transition") {
    SUBCASE("hand value") {
      const auto inst = make_instance({{0.3}, {1.0}}, {1.0});
      auto p = PolicyParams::zeros(1, 1);
      p.V(0, 0) = 1.0;
      p.W(0, 0) = 1.0;
      RankingState s = init_state(inst, p);
      s.h = Vector::Constant(1, 0.2);
      const RankingState next = transition(s, 0, inst, p);
      CHECK(std::abs(next.h[0] - std::tanh(0.5)) < 1e-15);
      CHECK(next.h[0] == doctest::Approx(0.4621).epsilon(1e-4));
      CHECK(next.selected == std::vector<int>{0});
      CHECK(next.remaining == std::vector<int>{1});
      // Input untouched.
      CHECK(s.selected.empty());
      CHECK(s.remaining.size() == 2);
      CHECK(s.h[0] == 0.2);
    }
    SUBCASE("zero maps") {
      RngStream rng(4);
      const auto inst = random_instance(4, 3, 2, rng);
      auto p = PolicyParams::random(3, 3, rng);
      p.V.setZero();
      p.W.setZero();
      CHECK(transition(init_state(inst, p), 2, inst, p).h == Vector::Zero(3));
    }
    SUBCASE("decoupled from the previous utility") {
      RngStream rng(5);
      const auto inst = random_instance(4, 3, 2, rng);
      auto p = PolicyParams::random(3, 3, rng);
      p.V = Matrix::Identity(3, 3);
      p.W.setZero();
      RankingState s = init_state(inst, p);
      s.h = Vector::Random(3);
      const Vector want = inst.embedding(1).array().tanh();
      CHECK((transition(s, 1, inst, p).h - want).norm() < 1e-15);
    }
    SUBCASE("action must be remaining") {
      RngStream rng(6);
      const auto inst = random_instance(3, 2, 2, rng);
      const auto p = PolicyParams::random(2, 2, rng);
      const auto s = transition(init_state(inst, p), 1, inst, p);
      CHECK_THROWS_AS(transition(s, 1, inst, p), ArgumentError);
      CHECK_THROWS_AS(transition(s, 7, inst, p), ArgumentError);
      CHECK_THROWS_AS(reward(s, 1, inst, 0.5), ArgumentError);
    }
  }

  TEST_CASE("reward hand values") {
    const auto inst = make_instance({{0.0}, {0.0}, {0.0}}, {1.0}, {{1, 0}, {1, 0}, {0, 0}});
    const auto p = PolicyParams::zeros(1, 1);
    RankingState s = init_state(inst, p);
    CHECK(reward(s, 0, inst, 0.5) == 1.0);
    CHECK(reward(s, 2, inst, 0.5) == 0.0);
    s = transition(s, 0, inst, p);
    CHECK(std::abs(reward(s, 1, inst, 0.5) - 0.5 / std::log2(3.0)) < 1e-15);
    CHECK(reward(s, 1, inst, 0.5) == doctest::Approx(0.3155).epsilon(1e-4));
  }

  TEST_CASE("rewards telescope and states are conserved") {
    RngStream rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      const auto inst = random_instance(9, 3, 4, rng);
      const auto p = PolicyParams::random(3, 2, rng);
      RankingState s = init_state(inst, p);
      double total = 0.0;
      std::vector<int> order(9);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng.engine());
      for (int t = 0; t < 6; ++t) {
        total += reward(s, order[t], inst, 0.5);
        s = transition(s, order[t], inst, p);
        CHECK(s.selected.size() + s.remaining.size() == 9u);
      }
      CHECK(std::abs(total - alpha_dcg(s.selected, inst.judgments, 0.5, 6)) < 1e-12);
    }
  }

  TEST_CASE("parameter file round trip") {
    RngStream rng(8);
    const auto p = PolicyParams::random(3, 2, rng);
    const std::string text = policy_to_json(p);
    CHECK(policy_from_json(text) == p);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["d"] == 3);
    CHECK(j["h"] == 2);
    // Row-major storage.
    CHECK(j["U"][1].get<double>() == p.U(0, 1));
    CHECK(j["V"][3].get<double>() == p.V(1, 0));
    auto broken = j;
    broken["W"].erase(0);
    CHECK_THROWS_AS(policy_from_json(broken.dump()), DataError);
  }

  TEST_CASE("random initialization range") {
    RngStream rng(9);
    const auto p = PolicyParams::random(5, 4, rng);
    CHECK(p.U.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(p.V.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(p.W.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(p.U.rows() == 5);
    CHECK(p.V.rows() == 4);
    CHECK(p.W.rows() == 4);
  }
}
