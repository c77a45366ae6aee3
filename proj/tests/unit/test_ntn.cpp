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
#include <limits>

#include <json.hpp>

#include "divrank/error.hpp"
#include "divrank/metrics.hpp"
#include "divrank/ntn.hpp"
#include "helpers.hpp"

using namespace divrank;
using namespace divrank::testing;

namespace {

NtnParams random_ntn(int d, int z, RngStream& rng, double scale = 1.0) {
  NtnParams p = NtnParams::zeros(d, z);
  for (int i = 0; i < d; ++i) p.omega[i] = rng.uniform(-scale, scale);
  for (int k = 0; k < z; ++k) {
    p.mu[k] = rng.uniform(-scale, scale);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) p.slices[k](i, j) = rng.uniform(-scale, scale);
    }
  }
  return p;
}

// Scalar-loop scorer over the query-conditioned features sqrt(d) * q .* x.
struct NaiveScorer {
  const QueryInstance& inst;
  const NtnParams& p;

  double feature(int doc, int i) const {
    return std::sqrt(static_cast<double>(inst.dimension())) * inst.query.embedding[i] *
           inst.embedding(doc)[i];
  }

  double score(int doc, const std::vector<int>& selected) const {
    const int d = inst.dimension();
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += p.omega[i] * feature(doc, i);
    if (selected.empty()) return s;
    for (int k = 0; k < p.slice_count(); ++k) {
      double best = -std::numeric_limits<double>::infinity();
      for (int other : selected) {
        double b = 0.0;
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) b += feature(doc, i) * p.slices[k](i, j) * feature(other, j);
        }
        best = std::max(best, b);
      }
      s += p.mu[k] * std::tanh(best);
    }
    return s;
  }

  Ranking rank(int length) const {
    Ranking out;
    std::vector<bool> used(inst.size(), false);
    for (int t = 0; t < length; ++t) {
      int best = -1;
      double best_score = 0.0;
      for (int doc = 0; doc < inst.size(); ++doc) {
        if (used[doc]) continue;
        const double s = score(doc, out);
        if (best < 0 || s > best_score) {
          best = doc;
          best_score = s;
        }
      }
      used[best] = true;
      out.push_back(best);
    }
    return out;
  }
};

double block_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-10});
  return std::sqrt(diff) / scale;
}

}  // namespace

TEST_SUITE("ntn") {
  TEST_CASE("score hand values") {
    NtnParams p = NtnParams::zeros(1, 1);
    p.omega[0] = 1.0;
    p.mu[0] = 1.0;
    p.slices[0](0, 0) = 2.0;
    Vector v(1);
    v << 0.5;
    Matrix s(1, 1);
    s << 1.0;
    CHECK(std::abs(ntn_score(v, s, p) - (0.5 + std::tanh(1.0))) < 1e-12);
    CHECK(ntn_score(v, s, p) == doctest::Approx(1.2616).epsilon(1e-4));
    CHECK(ntn_score(v, Matrix(1, 0), p) == 0.5);
  }

  TEST_CASE("score reductions") {
    RngStream rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      NtnParams p = random_ntn(3, 2, rng);
      Vector v = Vector::Random(3);
      Matrix s = Matrix::Random(3, 4);
      const double relevance = p.omega.dot(v);
      CHECK(ntn_score(v, Matrix(3, 0), p) == relevance);
      NtnParams no_mu = p;
      no_mu.mu.setZero();
      CHECK(ntn_score(v, s, no_mu) == doctest::Approx(relevance));
      NtnParams no_tensor = p;
      for (auto& w : no_tensor.slices) w.setZero();
      CHECK(ntn_score(v, s, no_tensor) == doctest::Approx(relevance));
    }
  }

  TEST_CASE("score dimension checks") {
    NtnParams p = NtnParams::zeros(2, 1);
    CHECK_THROWS_AS(ntn_score(Vector::Zero(3), Matrix(3, 0), p), ArgumentError);
    CHECK_THROWS_AS(ntn_score(Vector::Zero(2), Matrix::Zero(3, 1), p), ArgumentError);
  }

  TEST_CASE("per-slice max is monotone in the selected set") {
    RngStream rng(4);
    NtnParams p = random_ntn(3, 3, rng);
    const QueryInstance inst = random_instance(8, 3, 2, rng);
    const Matrix f = ntn_features(inst);
    IncrementalNtnScorer scorer(p, f);
    std::vector<int> candidates{4, 5, 6, 7};
    std::vector<double> before(3, -std::numeric_limits<double>::infinity());
    for (int doc : {0, 1, 2, 3}) {
      scorer.add_selected(doc, candidates);
      for (int k = 0; k < 3; ++k) {
        CHECK(scorer.slice_max(5, k) >= before[k]);
        before[k] = scorer.slice_max(5, k);
      }
    }
  }

  TEST_CASE("incremental scorer agrees with direct scoring") {
    RngStream rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      NtnParams p = random_ntn(4, 3, rng);
      const QueryInstance inst = random_instance(9, 4, 2, rng);
      const Matrix f = ntn_features(inst);
      IncrementalNtnScorer scorer(p, f);
      std::vector<int> pool{0, 1, 2, 3, 4, 5, 6, 7, 8};
      std::vector<int> selected;
      for (int step = 0; step < 4; ++step) {
        const int pick = pool[rng.index(pool.size())];
        pool.erase(std::find(pool.begin(), pool.end(), pick));
        selected.push_back(pick);
        scorer.add_selected(pick, pool);
        Matrix s(4, static_cast<Eigen::Index>(selected.size()));
        for (std::size_t c = 0; c < selected.size(); ++c) s.col(c) = f.col(selected[c]);
        for (int doc : pool) {
          CHECK(std::abs(scorer.score(doc) - ntn_score(f.col(doc), s, p)) < 1e-12);
        }
      }
    }
  }

  TEST_CASE("ntn_rank reductions") {
    RngStream rng(6);
    NtnParams p = random_ntn(3, 2, rng);
    const QueryInstance inst = random_instance(7, 3, 2, rng);
    const Matrix f = ntn_features(inst);
    // Length 1: the best relevance score.
    int best = 0;
    for (int i = 1; i < inst.size(); ++i) {
      if (p.omega.dot(f.col(i)) > p.omega.dot(f.col(best))) best = i;
    }
    CHECK(ntn_rank(inst, p, 1) == Ranking{best});
    // mu = 0: descending relevance, ties by index.
    p.mu.setZero();
    Ranking by_relevance(inst.size());
    std::iota(by_relevance.begin(), by_relevance.end(), 0);
    std::stable_sort(by_relevance.begin(), by_relevance.end(), [&](int a, int b) {
      return p.omega.dot(f.col(a)) > p.omega.dot(f.col(b));
    });
    CHECK(ntn_rank(inst, p, inst.size()) == by_relevance);
    // All-zero parameters: every score ties, so index order.
    CHECK(ntn_rank(inst, NtnParams::zeros(3, 2), 4) == Ranking{0, 1, 2, 3});
  }

  TEST_CASE("ntn_rank matches an independent greedy implementation") {
    RngStream rng(10);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = trial < 10 ? 2 : 4;
      const QueryInstance inst = random_instance(trial < 10 ? 4 : 12, d, 3, rng);
      const NtnParams p = random_ntn(d, 3, rng);
      const NaiveScorer naive{inst, p};
      CHECK(ntn_rank(inst, p, inst.size()) == naive.rank(inst.size()));
    }
  }

  TEST_CASE("sequence loss gradient matches finite differences") {
    RngStream rng(12);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 2 + static_cast<int>(rng.index(3));
      const int z = 1 + static_cast<int>(rng.index(3));
      const int m = 6;
      Matrix f = Matrix::Random(d, m);
      NtnParams p = random_ntn(d, z, rng, 0.5);
      std::vector<int> target(m);
      std::iota(target.begin(), target.end(), 0);
      std::shuffle(target.begin(), target.end(), rng.engine());
      const int positions = 4;

      NtnGradient g;
      ntn_sequence_loss(f, target, positions, p, &g);
      auto loss = [&](const NtnParams& q) { return ntn_sequence_loss(f, target, positions, q); };

      std::vector<double> a, n;
      for (int i = 0; i < d; ++i) {
        NtnParams up = p, dn = p;
        up.omega[i] += h;
        dn.omega[i] -= h;
        a.push_back(g.omega[i]);
        n.push_back((loss(up) - loss(dn)) / (2 * h));
      }
      CHECK(block_error(a, n) < 1e-4);
      a.clear();
      n.clear();
      for (int k = 0; k < z; ++k) {
        NtnParams up = p, dn = p;
        up.mu[k] += h;
        dn.mu[k] -= h;
        a.push_back(g.mu[k]);
        n.push_back((loss(up) - loss(dn)) / (2 * h));
      }
      CHECK(block_error(a, n) < 1e-4);
      a.clear();
      n.clear();
      for (int k = 0; k < z; ++k) {
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            NtnParams up = p, dn = p;
            up.slices[k](i, j) += h;
            dn.slices[k](i, j) -= h;
            a.push_back(g.slices[k](i, j));
            n.push_back((loss(up) - loss(dn)) / (2 * h));
          }
        }
      }
      CHECK(block_error(a, n) < 1e-4);
    }
  }

  TEST_CASE("pretraining contract") {
    SyntheticConfig sc;
    sc.n_queries = 4;
    sc.docs_per_query = 20;
    sc.dimension = 4;
    const Dataset ds = generate_synthetic(sc);
    NtnTrainConfig c;
    c.slices = 3;
    c.seed = 9;
    c.epochs = 0;
    CHECK(ntn_pretrain(ds, c) == ntn_initialize(4, c));
    const NtnParams init = ntn_initialize(4, c);
    CHECK(init.omega.cwiseAbs().maxCoeff() <= c.init_scale);
    c.epochs = 2;
    CHECK(ntn_pretrain(ds, c) == ntn_pretrain(ds, c));
    CHECK_FALSE(ntn_pretrain(ds, c) == init);
    CHECK_THROWS_AS(ntn_pretrain(Dataset{}, c), ArgumentError);
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(ntn_pretrain(ds, c), ArgumentError);
  }

  TEST_CASE("pretraining beats random rankings") {
    SyntheticConfig sc;
    sc.n_queries = 10;
    const Dataset ds = generate_synthetic(sc);
    const NtnParams p = ntn_pretrain(ds, NtnTrainConfig{});
    RngStream rng(1000);
    double trained = 0.0, random = 0.0;
    for (const auto& inst : ds.instances) {
      trained += alpha_ndcg(ntn_rank(inst, p, 10), inst.judgments, 0.5, 10);
      std::vector<int> perm(inst.size());
      std::iota(perm.begin(), perm.end(), 0);
      for (int r = 0; r < 1000; ++r) {
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        random += alpha_ndcg(std::span<const int>(perm.data(), 10), inst.judgments, 0.5, 10);
      }
    }
    trained /= static_cast<double>(ds.size());
    random /= 1000.0 * static_cast<double>(ds.size());
    MESSAGE("ntn " << trained << " random " << random);
    CHECK(trained >= random + 0.1);
  }

  TEST_CASE("parameter file round trip and layout") {
    RngStream rng(14);
    const NtnParams p = random_ntn(3, 2, rng);
    const std::string text = ntn_to_json(p);
    CHECK(ntn_from_json(text) == p);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["d"] == 3);
    CHECK(j["z"] == 2);
    const auto& tensor = j["tensor"];
    REQUIRE(tensor.size() == 18);
    for (int i = 0; i < 3; ++i) {
      for (int jj = 0; jj < 3; ++jj) {
        for (int k = 0; k < 2; ++k) {
          CHECK(tensor[(i * 3 + jj) * 2 + k].get<double>() == p.slices[k](i, jj));
        }
      }
    }
    auto broken = j;
    broken["tensor"].erase(0);
    CHECK_THROWS_AS(ntn_from_json(broken.dump()), DataError);
  }
}
