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

#include "divrank/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "divrank/error.hpp"
#include "divrank/metrics.hpp"

namespace divrank {

PolicyParams PolicyParams::zeros(int dimension, int hidden_dim) {
  if (dimension < 1 || hidden_dim < 1) throw ArgumentError("policy dimensions must be positive");
  return {Matrix::Zero(dimension, hidden_dim), Matrix::Zero(hidden_dim, dimension),
          Matrix::Zero(hidden_dim, hidden_dim)};
}

PolicyParams PolicyParams::random(int dimension, int hidden_dim, RngStream& rng, double scale) {
  PolicyParams p = zeros(dimension, hidden_dim);
  for (Matrix* m : {&p.U, &p.V, &p.W}) {
    for (Eigen::Index j = 0; j < m->cols(); ++j) {
      for (Eigen::Index i = 0; i < m->rows(); ++i) (*m)(i, j) = rng.uniform(-scale, scale);
    }
  }
  return p;
}

void PolicyParams::validate() const {
  const auto d = U.rows();
  const auto h = U.cols();
  if (d < 1 || h < 1 || V.rows() != h || V.cols() != d || W.rows() != h || W.cols() != h) {
    throw ArgumentError("inconsistent policy parameter shapes");
  }
  if (!all_finite()) throw NumericalError("policy parameters are not finite");
}

bool PolicyParams::all_finite() const {
  return U.allFinite() && V.allFinite() && W.allFinite();
}

std::vector<int> Episode::actions() const {
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

std::vector<double> Episode::rewards() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.reward);
  return out;
}

namespace {

void check_dims(const QueryInstance& instance, const PolicyParams& params) {
  if (instance.dimension() != params.dimension() || params.V.cols() != params.dimension() ||
      params.V.rows() != params.hidden_dim() || params.W.rows() != params.hidden_dim() ||
      params.W.cols() != params.hidden_dim()) {
    throw ArgumentError("policy parameters do not match instance dimension " +
                        std::to_string(instance.dimension()));
  }
}

void check_action(const RankingState& state, int action) {
  if (!std::binary_search(state.remaining.begin(), state.remaining.end(), action)) {
    throw ArgumentError("action " + std::to_string(action) + " is not in the remaining set");
  }
}

}  // namespace

RankingState init_state(const QueryInstance& instance, const PolicyParams& params) {
  std::vector<int> all(instance.size());
  std::iota(all.begin(), all.end(), 0);
  return init_state(instance, params, std::move(all));
}

RankingState init_state(const QueryInstance& instance, const PolicyParams& params,
                        std::vector<int> candidates) {
  check_dims(instance, params);
  std::sort(candidates.begin(), candidates.end());
  if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end() ||
      (!candidates.empty() && (candidates.front() < 0 || candidates.back() >= instance.size()))) {
    throw ArgumentError("invalid candidate set");
  }
  RankingState s;
  s.remaining = std::move(candidates);
  s.h = (params.V * instance.query.embedding).array().tanh();
  return s;
}

Vector policy_scores(const RankingState& state, const QueryInstance& instance,
                     const PolicyParams& params) {
  check_dims(instance, params);
  const Vector uh = params.U * state.h;
  Vector scores(static_cast<Eigen::Index>(state.remaining.size()));
  for (std::size_t i = 0; i < state.remaining.size(); ++i) {
    scores[static_cast<Eigen::Index>(i)] = instance.embedding(state.remaining[i]).dot(uh);
  }
  return scores;
}

Vector softmax(const Vector& scores) {
  const Vector e = (scores.array() - scores.maxCoeff()).exp();
  return e / e.sum();
}

Vector policy_probs(const RankingState& state, const QueryInstance& instance,
                    const PolicyParams& params) {
  if (state.remaining.empty()) throw StateError("policy over an empty action set");
  return softmax(policy_scores(state, instance, params));
}

RankingState transition(const RankingState& state, int action, const QueryInstance& instance,
                        const PolicyParams& params) {
  check_dims(instance, params);
  check_action(state, action);
  RankingState next;
  next.selected = state.selected;
  next.selected.push_back(action);
  next.remaining.reserve(state.remaining.size() - 1);
  for (int d : state.remaining) {
    if (d != action) next.remaining.push_back(d);
  }
  next.h = (params.V * instance.embedding(action) + params.W * state.h).array().tanh();
  return next;
}

double reward(const RankingState& state, int action, const QueryInstance& instance,
              double alpha) {
  check_action(state, action);
  const auto& j = instance.judgments;
  std::vector<int> coverage(j.cols(), 0);
  for (int d : state.selected) {
    for (int i = 0; i < j.cols(); ++i) coverage[i] += j(d, i) ? 1 : 0;
  }
  return novelty_gain(j, action, coverage, alpha) / std::log2(state.step() + 2.0);
}

namespace {

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

Matrix from_row_major(const std::vector<double>& v, int rows, int cols, const char* name) {
  if (v.size() != static_cast<std::size_t>(rows) * cols) {
    throw DimensionError(std::string("policy matrix ") + name + " has wrong size");
  }
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i) * cols + j];
  }
  return m;
}

}  // namespace

std::string policy_to_json(const PolicyParams& params) {
  params.validate();
  nlohmann::ordered_json obj;
  obj["d"] = params.dimension();
  obj["h"] = params.hidden_dim();
  obj["U"] = row_major(params.U);
  obj["V"] = row_major(params.V);
  obj["W"] = row_major(params.W);
  return obj.dump();
}

PolicyParams policy_from_json(const std::string& text) {
  try {
    const auto obj = nlohmann::json::parse(text);
    const int d = obj.at("d").get<int>();
    const int h = obj.at("h").get<int>();
    if (d < 1 || h < 1) throw DimensionError("policy dimensions must be positive");
    PolicyParams p{from_row_major(obj.at("U").get<std::vector<double>>(), d, h, "U"),
                   from_row_major(obj.at("V").get<std::vector<double>>(), h, d, "V"),
                   from_row_major(obj.at("W").get<std::vector<double>>(), h, h, "W")};
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("policy parameters: ") + e.what());
  }
}

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << policy_to_json(params) << '\n';
}

PolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

}  // namespace divrank
