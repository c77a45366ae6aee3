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

#include "divrank/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "divrank/error.hpp"

namespace divrank {

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw ArgumentError("eta must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in [0, 1]");
  if (m < 1) throw ArgumentError("episode length m must be at least 1");
  if (hidden_dim < 0) throw ArgumentError("hidden_dim must be nonnegative");
  if (max_iterations < 0) throw ArgumentError("max_iterations must be nonnegative");
  if (convergence.patience < 1) throw ArgumentError("patience must be at least 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in [0, 1)");
  divrank::validate(strategy);
}

void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out) {
  out << "iteration,wall_clock_seconds,eval_count,val_alpha_ndcg_10,train_mean_return\n";
  const auto old = out.precision(17);
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.wall_clock_seconds << ',' << r.eval_count << ','
        << r.val_alpha_ndcg_10 << ',' << r.train_mean_return << '\n';
  }
  out.precision(old);
}

std::vector<double> compute_returns(const Episode& episode, double gamma) {
  if (episode.steps.empty()) throw ArgumentError("cannot compute returns of an empty episode");
  const std::size_t n = episode.steps.size();
  std::vector<double> g(n);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    acc = episode.steps[t].reward + gamma * acc;
    g[t] = acc;
  }
  return g;
}

namespace {

void check_episode(const Episode& episode, const QueryInstance& instance,
                   const PolicyParams& params) {
  if (episode.steps.empty()) throw ArgumentError("empty episode");
  if (instance.dimension() != params.dimension() || params.V.cols() != params.dimension() ||
      params.V.rows() != params.hidden_dim() || params.W.rows() != params.hidden_dim() ||
      params.W.cols() != params.hidden_dim()) {
    throw ArgumentError("policy parameters do not match instance dimension");
  }
}

// Forward pass over a fixed episode: utilities h_t and the softmax over each
// step's action set.
struct Forward {
  std::vector<Vector> h;
  std::vector<Vector> probs;
  std::vector<int> chosen;  // position of a_t inside the step's remaining set
};

Forward forward(const Episode& episode, const QueryInstance& instance,
                const PolicyParams& params) {
  Forward f;
  const std::size_t n = episode.steps.size();
  f.h.reserve(n);
  f.probs.reserve(n);
  Vector h = (params.V * instance.query.embedding).array().tanh();
  for (std::size_t t = 0; t < n; ++t) {
    const auto& step = episode.steps[t];
    const auto& rem = step.state.remaining;
    const auto it = std::find(rem.begin(), rem.end(), step.action);
    if (it == rem.end()) throw ArgumentError("episode action outside its action set");
    f.chosen.push_back(static_cast<int>(it - rem.begin()));
    const Vector uh = params.U * h;
    Vector s(static_cast<Eigen::Index>(rem.size()));
    for (std::size_t i = 0; i < rem.size(); ++i) {
      s[static_cast<Eigen::Index>(i)] = instance.embedding(rem[i]).dot(uh);
    }
    f.probs.push_back(softmax(s));
    f.h.push_back(h);
    if (t + 1 < n) {
      h = (params.V * instance.embedding(step.action) + params.W * h).array().tanh();
    }
  }
  return f;
}

}  // namespace

double surrogate_objective(const Episode& episode, const QueryInstance& instance,
                           const PolicyParams& params, double gamma) {
  check_episode(episode, instance, params);
  const auto g = compute_returns(episode, gamma);
  const Forward f = forward(episode, instance, params);
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    total += discount * g[t] * std::log(f.probs[t][f.chosen[t]]);
    discount *= gamma;
  }
  return total;
}

PolicyGradient policy_gradient(const Episode& episode, const QueryInstance& instance,
                               const PolicyParams& params, double gamma) {
  check_episode(episode, instance, params);
  const int d = params.dimension();
  const int hd = params.hidden_dim();
  PolicyGradient grad{Matrix::Zero(d, hd), Matrix::Zero(hd, d), Matrix::Zero(hd, hd)};

  const auto g = compute_returns(episode, gamma);
  const Forward f = forward(episode, instance, params);
  const std::size_t n = episode.steps.size();

  // Direct terms: d/dU and d/dh_t of c_t * log pi(a_t | s_t).
  std::vector<Vector> dh(n);
  double discount = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double c = discount * g[t];
    discount *= gamma;
    const auto& rem = episode.steps[t].state.remaining;
    Vector expected = Vector::Zero(d);
    for (std::size_t i = 0; i < rem.size(); ++i) {
      expected += f.probs[t][static_cast<Eigen::Index>(i)] * instance.embedding(rem[i]);
    }
    const Vector diff = instance.embedding(episode.steps[t].action) - expected;
    grad.dU.noalias() += c * diff * f.h[t].transpose();
    dh[t] = c * (params.U.transpose() * diff);
  }

  // Backpropagation through h_t = tanh(V x_{a_{t-1}} + W h_{t-1}).
  Vector carry = Vector::Zero(hd);
  for (std::size_t t = n; t-- > 0;) {
    const Vector total = dh[t] + carry;
    const Vector pre = total.cwiseProduct((1.0 - f.h[t].array().square()).matrix());
    if (t > 0) {
      grad.dV.noalias() += pre * instance.embedding(episode.steps[t - 1].action).transpose();
      grad.dW.noalias() += pre * f.h[t - 1].transpose();
      carry = params.W.transpose() * pre;
    } else {
      grad.dV.noalias() += pre * instance.query.embedding.transpose();
    }
  }
  return grad;
}

void apply_gradient(PolicyParams& params, const PolicyGradient& gradient, double eta) {
  params.U += eta * gradient.dU;
  params.V += eta * gradient.dV;
  params.W += eta * gradient.dW;
}

Ranking greedy_decode(const QueryInstance& instance, const PolicyParams& params, int m) {
  if (m < 0 || m > instance.size()) throw ArgumentError("decode length exceeds candidate count");
  RankingState state = init_state(instance, params);
  Ranking ranking;
  ranking.reserve(m);
  for (int t = 0; t < m; ++t) {
    const Vector s = policy_scores(state, instance, params);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.size(); ++i) {
      if (s[i] > s[best]) best = i;
    }
    const int action = state.remaining[best];
    ranking.push_back(action);
    if (t + 1 < m) state = transition(state, action, instance, params);
  }
  return ranking;
}

double mean_alpha_ndcg_10(const Dataset& dataset, const PolicyParams& params, double alpha) {
  if (dataset.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : dataset.instances) {
    const Ranking r = greedy_decode(inst, params, std::min(10, inst.size()));
    total += alpha_ndcg(r, inst.judgments, alpha, 10);
  }
  return total / static_cast<double>(dataset.size());
}

TrainResult train(const Dataset& train_set, const Dataset& validation_set,
                  const TrainConfig& config) {
  if (train_set.empty()) throw ArgumentError("training set is empty");
  config.validate();
  const int d = train_set.dimension;
  const int hd = config.hidden_dim > 0 ? config.hidden_dim : d;
  const Dataset& validation = validation_set.empty() ? train_set : validation_set;

  RngStream init_rng(derive_seed(config.seed, {0}));
  TrainResult result;
  result.params = PolicyParams::random(d, hd, init_rng, 1.0);
  if (config.max_iterations == 0) return result;

  std::vector<std::vector<int>> candidates;
  candidates.reserve(train_set.size());
  for (const auto& inst : train_set.instances) {
    candidates.push_back(initial_candidates(config.strategy, inst));
  }

  RngStream rng(derive_seed(config.seed, {1}));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  PolicyParams params = result.params;
  result.best_validation = mean_alpha_ndcg_10(validation, params, config.alpha);
  double reference = result.best_validation;
  int stale = 0;
  const auto start = std::chrono::steady_clock::now();

  for (int it = 1; it <= config.max_iterations; ++it) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double return_sum = 0.0;
    for (std::size_t q : order) {
      const auto& inst = train_set.instances[q];
      const Episode ep = sample_episode(config.strategy, params, inst, config.alpha, config.m,
                                        rng, candidates[q]);
      result.eval_count += ep.evaluation_count;
      result.ntn_eval_count += ep.ntn_evaluation_count;
      ++result.episodes;
      return_sum += compute_returns(ep, config.gamma).front();
      apply_gradient(params, policy_gradient(ep, inst, params, config.gamma), config.eta);
    }
    if (!params.all_finite()) {
      throw NumericalError("policy parameters became non-finite at iteration " +
                           std::to_string(it));
    }

    const double val = mean_alpha_ndcg_10(validation, params, config.alpha);
    TraceRecord rec;
    rec.iteration = it;
    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.eval_count = result.eval_count;
    rec.val_alpha_ndcg_10 = val;
    rec.train_mean_return = return_sum / static_cast<double>(order.size());
    result.trace.records.push_back(rec);

    if (val > result.best_validation) {
      result.best_validation = val;
      result.best_iteration = it;
      result.params = params;
    }
    if (val >= reference + config.convergence.min_delta) {
      reference = val;
      stale = 0;
    } else if (++stale >= config.convergence.patience) {
      break;
    }
  }
  return result;
}

}  // namespace divrank
