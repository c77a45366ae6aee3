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

#include "divrank/ntn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "divrank/error.hpp"
#include "divrank/random.hpp"

namespace divrank {

NtnParams NtnParams::zeros(int dimension, int slices) {
  if (dimension < 1 || slices < 1) throw ArgumentError("NTN dimension and slices must be positive");
  NtnParams p;
  p.omega = Vector::Zero(dimension);
  p.mu = Vector::Zero(slices);
  p.slices.assign(slices, Matrix::Zero(dimension, dimension));
  return p;
}

void NtnParams::validate() const {
  const int d = dimension();
  if (d < 1 || slice_count() < 1) throw ArgumentError("NTN parameters are empty");
  if (static_cast<int>(slices.size()) != slice_count()) {
    throw ArgumentError("NTN tensor slice count does not match mu");
  }
  if (!omega.allFinite() || !mu.allFinite()) throw NumericalError("NTN weights are not finite");
  for (const auto& w : slices) {
    if (w.rows() != d || w.cols() != d) throw ArgumentError("NTN tensor slice has wrong shape");
    if (!w.allFinite()) throw NumericalError("NTN tensor is not finite");
  }
}

bool NtnParams::operator==(const NtnParams& other) const {
  if (omega.size() != other.omega.size() || mu.size() != other.mu.size() ||
      slices.size() != other.slices.size()) {
    return false;
  }
  if (omega != other.omega || mu != other.mu) return false;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    if (slices[k] != other.slices[k]) return false;
  }
  return true;
}

void NtnTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("NTN learning rate must be positive");
  if (epochs < 0) throw ArgumentError("NTN epochs must be nonnegative");
  if (slices < 1) throw ArgumentError("NTN slice count must be positive");
  if (list_length < 1) throw ArgumentError("NTN list length must be positive");
  if (!(init_scale >= 0.0)) throw ArgumentError("NTN init scale must be nonnegative");
}

double ntn_score(const Vector& v, const Matrix& selected, const NtnParams& params) {
  const int d = params.dimension();
  if (v.size() != d || (selected.cols() > 0 && selected.rows() != d)) {
    throw ArgumentError("NTN input dimension does not match parameters");
  }
  const double relevance = params.omega.dot(v);
  if (selected.cols() == 0) return relevance;
  double novelty = 0.0;
  for (int k = 0; k < params.slice_count(); ++k) {
    const Eigen::RowVectorXd row = v.transpose() * params.slices[k] * selected;
    novelty += params.mu[k] * std::tanh(row.maxCoeff());
  }
  return relevance + novelty;
}

Matrix ntn_features(const QueryInstance& instance) {
  const int d = instance.dimension();
  const int m = instance.size();
  const double scale = std::sqrt(static_cast<double>(d));
  Matrix f(d, m);
  for (int i = 0; i < m; ++i) {
    f.col(i) = scale * instance.query.embedding.cwiseProduct(instance.embedding(i));
  }
  return f;
}

IncrementalNtnScorer::IncrementalNtnScorer(const NtnParams& params, const Matrix& features)
    : params_(params), features_(features) {
  if (features.rows() != params.dimension()) {
    throw ArgumentError("NTN feature dimension does not match parameters");
  }
  relevance_ = features.transpose() * params.omega;
  maxima_ = Matrix::Constant(params.slice_count(), features.cols(),
                             -std::numeric_limits<double>::infinity());
  argmax_ = Eigen::MatrixXi::Constant(params.slice_count(), features.cols(), -1);
}

void IncrementalNtnScorer::add_selected(int doc, std::span<const int> candidates) {
  const int z = params_.slice_count();
  const int pos = static_cast<int>(selected_.size());
  selected_.push_back(doc);
  // Column k of projected is W_k v_doc.
  Matrix projected(features_.rows(), z);
  for (int k = 0; k < z; ++k) projected.col(k).noalias() = params_.slices[k] * features_.col(doc);
  for (int c : candidates) {
    const Vector values = projected.transpose() * features_.col(c);
    for (int k = 0; k < z; ++k) {
      if (values[k] > maxima_(k, c)) {
        maxima_(k, c) = values[k];
        argmax_(k, c) = pos;
      }
    }
  }
}

double IncrementalNtnScorer::score(int doc) const {
  double s = relevance_[doc];
  if (selected_.empty()) return s;
  for (int k = 0; k < params_.slice_count(); ++k) {
    s += params_.mu[k] * std::tanh(maxima_(k, doc));
  }
  return s;
}

Ranking ntn_rank(const QueryInstance& instance, const NtnParams& params, int length) {
  const int m = instance.size();
  if (length < 0 || length > m) throw ArgumentError("ranking length exceeds candidate count");
  if (instance.dimension() != params.dimension()) {
    throw ArgumentError("NTN dimension does not match instance");
  }
  const Matrix features = ntn_features(instance);
  IncrementalNtnScorer scorer(params, features);
  std::vector<int> remaining(m);
  std::iota(remaining.begin(), remaining.end(), 0);
  Ranking ranking;
  ranking.reserve(length);
  for (int t = 0; t < length; ++t) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const double s = scorer.score(remaining[i]);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    const int chosen = remaining[best];
    ranking.push_back(chosen);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    if (t + 1 < length) scorer.add_selected(chosen, remaining);
  }
  return ranking;
}

double ntn_sequence_loss(const Matrix& features, std::span<const int> target, int positions,
                         const NtnParams& params, NtnGradient* gradient) {
  const int d = params.dimension();
  const int z = params.slice_count();
  const int m = static_cast<int>(features.cols());
  if (features.rows() != d) throw ArgumentError("NTN feature dimension does not match parameters");
  const int steps = std::min<int>(positions, static_cast<int>(target.size()));

  if (gradient != nullptr) {
    gradient->omega = Vector::Zero(d);
    gradient->mu = Vector::Zero(z);
    gradient->slices.assign(z, Matrix::Zero(d, d));
  }

  IncrementalNtnScorer scorer(params, features);
  std::vector<bool> taken(m, false);
  std::vector<int> candidates;
  Vector scores;
  double loss = 0.0;
  for (int t = 0; t < steps; ++t) {
    candidates.clear();
    for (int c = 0; c < m; ++c) {
      if (!taken[c]) candidates.push_back(c);
    }
    const int chosen = target[t];
    if (chosen < 0 || chosen >= m || taken[chosen]) throw ArgumentError("invalid target ranking");

    scores.resize(static_cast<Eigen::Index>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] = scorer.score(candidates[i]);
    const double top = scores.maxCoeff();
    const Vector expd = (scores.array() - top).exp();
    const double log_z = top + std::log(expd.sum());
    loss -= scorer.score(chosen) - log_z;

    if (gradient != nullptr) {
      // d loss / d score_c = p_c - [c == chosen].
      Vector weight = expd / expd.sum();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] == chosen) weight[i] -= 1.0;
      }
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        gradient->omega += weight[i] * features.col(candidates[i]);
      }
      const int n_sel = scorer.selected_count();
      if (n_sel > 0) {
        Matrix selected(d, n_sel);
        for (int s = 0; s < n_sel; ++s) selected.col(s) = features.col(scorer.selected()[s]);
        Matrix acc(d, n_sel);
        for (int k = 0; k < z; ++k) {
          acc.setZero();
          for (std::size_t i = 0; i < candidates.size(); ++i) {
            const int c = candidates[i];
            const double th = std::tanh(scorer.slice_max(c, k));
            gradient->mu[k] += weight[i] * th;
            acc.col(scorer.slice_argmax(c, k)) +=
                (weight[i] * params.mu[k] * (1.0 - th * th)) * features.col(c);
          }
          gradient->slices[k].noalias() += acc * selected.transpose();
        }
      }
    }

    taken[chosen] = true;
    if (t + 1 < steps) {
      candidates.erase(std::find(candidates.begin(), candidates.end(), chosen));
      scorer.add_selected(chosen, candidates);
    }
  }
  return loss;
}

NtnParams ntn_initialize(int dimension, const NtnTrainConfig& config) {
  config.validate();
  NtnParams p = NtnParams::zeros(dimension, config.slices);
  RngStream rng(config.seed);
  const double s = config.init_scale;
  auto draw = [&] { return s > 0.0 ? rng.uniform(-s, s) : 0.0; };
  for (int i = 0; i < dimension; ++i) p.omega[i] = draw();
  for (int k = 0; k < config.slices; ++k) p.mu[k] = draw();
  for (auto& w : p.slices) {
    for (int i = 0; i < dimension; ++i) {
      for (int j = 0; j < dimension; ++j) w(i, j) = draw();
    }
  }
  return p;
}

NtnParams ntn_pretrain(const Dataset& train, const NtnTrainConfig& config) {
  if (train.empty()) throw ArgumentError("NTN pretraining needs at least one query");
  config.validate();
  NtnParams params = ntn_initialize(train.dimension, config);

  std::vector<Matrix> features;
  std::vector<Ranking> targets;
  for (const auto& inst : train.instances) {
    features.push_back(ntn_features(inst));
    targets.push_back(greedy_ideal_ranking(inst.judgments, config.alpha, config.list_length));
  }

  RngStream rng(derive_seed(config.seed, {1}));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  NtnGradient grad;
  const double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t q : order) {
      ntn_sequence_loss(features[q], targets[q], config.list_length, params, &grad);
      params.omega -= lr * grad.omega;
      params.mu -= lr * grad.mu;
      for (int k = 0; k < params.slice_count(); ++k) params.slices[k] -= lr * grad.slices[k];
    }
    if (!params.omega.allFinite() || !params.mu.allFinite()) {
      throw NumericalError("NTN pretraining diverged");
    }
  }
  params.validate();
  return params;
}

std::string ntn_to_json(const NtnParams& params) {
  params.validate();
  const int d = params.dimension();
  const int z = params.slice_count();
  std::vector<double> tensor(static_cast<std::size_t>(d) * d * z);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < z; ++k) {
        tensor[(static_cast<std::size_t>(i) * d + j) * z + k] = params.slices[k](i, j);
      }
    }
  }
  nlohmann::ordered_json obj;
  obj["d"] = d;
  obj["z"] = z;
  obj["omega"] = std::vector<double>(params.omega.begin(), params.omega.end());
  obj["mu"] = std::vector<double>(params.mu.begin(), params.mu.end());
  obj["tensor"] = tensor;
  return obj.dump();
}

NtnParams ntn_from_json(const std::string& text) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
    const int d = obj.at("d").get<int>();
    const int z = obj.at("z").get<int>();
    const auto omega = obj.at("omega").get<std::vector<double>>();
    const auto mu = obj.at("mu").get<std::vector<double>>();
    const auto tensor = obj.at("tensor").get<std::vector<double>>();
    if (d < 1 || z < 1 || omega.size() != static_cast<std::size_t>(d) ||
        mu.size() != static_cast<std::size_t>(z) ||
        tensor.size() != static_cast<std::size_t>(d) * d * z) {
      throw DimensionError("NTN parameter arrays do not match d and z");
    }
    NtnParams p = NtnParams::zeros(d, z);
    p.omega = Eigen::Map<const Vector>(omega.data(), d);
    p.mu = Eigen::Map<const Vector>(mu.data(), z);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < z; ++k) {
          p.slices[k](i, j) = tensor[(static_cast<std::size_t>(i) * d + j) * z + k];
        }
      }
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("NTN parameters: ") + e.what());
  }
}

void save_ntn(const NtnParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << ntn_to_json(params) << '\n';
}

NtnParams load_ntn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ntn_from_json(ss.str());
}

}  // namespace divrank
