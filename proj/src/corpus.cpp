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

#include "divrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "divrank/error.hpp"
#include "divrank/random.hpp"

namespace divrank {

using ojson = nlohmann::ordered_json;

JudgmentMatrix::JudgmentMatrix(int rows, int cols)
    : rows_(rows), cols_(cols),
      entries_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0) {
  if (rows < 0 || cols < 0) throw ArgumentError("negative judgment matrix shape");
}

void JudgmentMatrix::set(int doc, int subtopic, bool value) {
  if (doc < 0 || doc >= rows_ || subtopic < 0 || subtopic >= cols_) {
    throw ArgumentError("judgment index out of range");
  }
  entries_[static_cast<std::size_t>(doc) * cols_ + subtopic] = value ? 1 : 0;
}

bool JudgmentMatrix::row_is_zero(int doc) const {
  const auto* row = entries_.data() + static_cast<std::size_t>(doc) * cols_;
  return std::all_of(row, row + cols_, [](std::uint8_t e) { return e == 0; });
}

int JudgmentMatrix::nonzero_rows() const {
  int n = 0;
  for (int i = 0; i < rows_; ++i) n += row_is_zero(i) ? 0 : 1;
  return n;
}

namespace {

void check_embedding(const Vector& v, int dimension, const std::string& what) {
  if (v.size() != dimension) {
    throw DimensionError(what + " has " + std::to_string(v.size()) +
                         " entries, expected " + std::to_string(dimension));
  }
  if (!v.allFinite()) throw DimensionError(what + " has non-finite entries");
}

}  // namespace

void validate(const QueryInstance& instance, int dimension) {
  const auto& q = instance.query;
  if (dimension <= 0) throw DimensionError("dimension must be positive");
  check_embedding(q.embedding, dimension, "query '" + q.id + "' embedding");
  if (q.subtopic_count < 1) {
    throw IntegrityError("query '" + q.id + "' has subtopic count < 1");
  }
  std::unordered_set<std::string> ids;
  for (const auto& doc : instance.documents) {
    check_embedding(doc.embedding, dimension, "document '" + doc.id + "' embedding");
    if (!ids.insert(doc.id).second) {
      throw IntegrityError("duplicate document id '" + doc.id + "' in query '" + q.id + "'");
    }
  }
  if (instance.judgments.rows() != instance.size() ||
      instance.judgments.cols() != q.subtopic_count) {
    throw IntegrityError("judgment matrix of query '" + q.id + "' is " +
                         std::to_string(instance.judgments.rows()) + "x" +
                         std::to_string(instance.judgments.cols()) + ", expected " +
                         std::to_string(instance.size()) + "x" +
                         std::to_string(q.subtopic_count));
  }
}

void validate(const Dataset& dataset) {
  std::unordered_set<std::string> ids;
  for (const auto& inst : dataset.instances) {
    validate(inst, dataset.dimension);
    if (!ids.insert(inst.query.id).second) {
      throw IntegrityError("duplicate query id '" + inst.query.id + "'");
    }
  }
}

namespace {

Vector read_vector(const ojson& node, const char* what) {
  if (!node.is_array()) throw DataError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number()) throw DataError(std::string(what) + " entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = node[i].get<double>();
  }
  return v;
}

const ojson& field(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing key '") + key + "'");
  return *it;
}

QueryInstance parse_instance(const ojson& obj) {
  if (!obj.is_object()) throw DataError("line is not a JSON object");
  QueryInstance inst;
  const auto& qid = field(obj, "query_id");
  if (!qid.is_string()) throw DataError("query_id must be a string");
  inst.query.id = qid.get<std::string>();
  inst.query.embedding = read_vector(field(obj, "query_embedding"), "query_embedding");
  const auto& t = field(obj, "subtopics");
  if (!t.is_number_integer()) throw DataError("subtopics must be an integer");
  inst.query.subtopic_count = t.get<int>();

  const auto& docs = field(obj, "documents");
  if (!docs.is_array()) throw DataError("documents must be an array");
  std::vector<std::vector<int>> labels;
  for (const auto& d : docs) {
    if (!d.is_object()) throw DataError("document entry must be an object");
    const auto& did = field(d, "doc_id");
    if (!did.is_string()) throw DataError("doc_id must be a string");
    inst.documents.push_back({did.get<std::string>(), read_vector(field(d, "embedding"), "embedding")});
    const auto& lab = field(d, "labels");
    if (!lab.is_array()) throw DataError("labels must be an array");
    std::vector<int> row;
    for (const auto& e : lab) {
      if (!e.is_number_integer() || (e.get<long long>() != 0 && e.get<long long>() != 1)) {
        throw DataError("labels entries must be 0 or 1");
      }
      row.push_back(e.get<int>());
    }
    labels.push_back(std::move(row));
  }

  const int m = static_cast<int>(labels.size());
  const int cols = std::max(inst.query.subtopic_count, 0);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(labels[i].size()) != cols) {
      throw IntegrityError("document '" + inst.documents[i].id + "' has " +
                           std::to_string(labels[i].size()) + " labels, expected " +
                           std::to_string(cols));
    }
  }
  inst.judgments = JudgmentMatrix(m, cols);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < cols; ++j) inst.judgments.set(i, j, labels[i][j] != 0);
  }
  return inst;
}

// Re-throws `e` with a line prefix while keeping its dynamic type.
[[noreturn]] void rethrow_with_line(std::size_t line) {
  const std::string prefix = "line " + std::to_string(line) + ": ";
  try {
    throw;
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const IntegrityError& e) {
    throw IntegrityError(prefix + e.what());
  } catch (const DataError& e) {
    throw ParseError(line, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, e.what());
  }
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
  Dataset ds;
  std::unordered_set<std::string> query_ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      QueryInstance inst = parse_instance(ojson::parse(text));
      if (ds.instances.empty()) ds.dimension = inst.dimension();
      validate(inst, ds.dimension);
      if (!query_ids.insert(inst.query.id).second) {
        throw IntegrityError("duplicate query id '" + inst.query.id + "'");
      }
      ds.instances.push_back(std::move(inst));
    } catch (...) {
      rethrow_with_line(line);
    }
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");
  return parse_dataset(in);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& inst : dataset.instances) {
    ojson obj;
    obj["query_id"] = inst.query.id;
    obj["query_embedding"] = std::vector<double>(inst.query.embedding.begin(),
                                                 inst.query.embedding.end());
    obj["subtopics"] = inst.query.subtopic_count;
    ojson docs = ojson::array();
    for (int i = 0; i < inst.size(); ++i) {
      ojson d;
      d["doc_id"] = inst.documents[i].id;
      const auto& e = inst.documents[i].embedding;
      d["embedding"] = std::vector<double>(e.begin(), e.end());
      std::vector<int> labels(inst.judgments.cols());
      for (int j = 0; j < inst.judgments.cols(); ++j) labels[j] = inst.judgments(i, j) ? 1 : 0;
      d["labels"] = labels;
      docs.push_back(std::move(d));
    }
    obj["documents"] = std::move(docs);
    out << obj.dump() << '\n';
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file '" + path.string() + "'");
  write_dataset(dataset, out);
}

std::string dataset_to_string(const Dataset& dataset) {
  std::ostringstream os;
  write_dataset(dataset, os);
  return os.str();
}

std::uint64_t dataset_fingerprint(const Dataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dataset_to_string(dataset)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void SyntheticConfig::validate() const {
  if (n_queries < 1 || docs_per_query < 1 || subtopics < 1 || dimension < 1) {
    throw ArgumentError("synthetic config counts must be positive");
  }
  if (!(relevant_fraction > 0.0 && relevant_fraction <= 1.0)) {
    throw ArgumentError("relevant_fraction must lie in (0, 1]");
  }
  if (!(subtopic_noise_scale >= 0.0) || !std::isfinite(subtopic_noise_scale)) {
    throw ArgumentError("subtopic_noise_scale must be a nonnegative real");
  }
  if (!(subtopic_spread >= 0.0) || !std::isfinite(subtopic_spread)) {
    throw ArgumentError("subtopic_spread must be a nonnegative real");
  }
}

namespace {

Vector random_unit(RngStream& rng, int d) {
  Vector v(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed);
  const int d = cfg.dimension;
  const int m = cfg.docs_per_query;
  const int t = cfg.subtopics;
  // The epsilon keeps e.g. 0.3 * 100 from rounding up to 31.
  const int n_relevant =
      std::min(m, static_cast<int>(std::ceil(cfg.relevant_fraction * m - 1e-9)));

  Dataset ds;
  ds.dimension = d;
  ds.instances.reserve(cfg.n_queries);
  for (int n = 0; n < cfg.n_queries; ++n) {
    QueryInstance inst;
    inst.query.id = "q" + std::to_string(n);
    inst.query.subtopic_count = t;

    // Subtopics are facets of one topic: each center is the topic direction
    // pushed by `subtopic_spread` along a random direction, then projected
    // back onto the sphere.
    const Vector topic = random_unit(rng, d);
    std::vector<Vector> centers;
    Vector mean = Vector::Zero(d);
    for (int i = 0; i < t; ++i) {
      Vector c = topic + cfg.subtopic_spread * random_unit(rng, d);
      const double norm = c.norm();
      centers.push_back(norm > 0.0 ? Vector(c / norm) : topic);
      mean += centers.back();
    }
    inst.query.embedding = mean.norm() > 0.0 ? Vector(mean / mean.norm()) : centers.front();

    // Relevant documents are scattered over random positions in the list.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<bool> relevant(m, false);
    for (int i = 0; i < n_relevant; ++i) relevant[order[i]] = true;

    inst.judgments = JudgmentMatrix(m, t);
    inst.documents.resize(m);
    for (int i = 0; i < m; ++i) {
      auto& doc = inst.documents[i];
      doc.id = inst.query.id + "-d" + std::to_string(i);
      if (!relevant[i]) {
        doc.embedding = random_unit(rng, d);
        continue;
      }
      const int first = static_cast<int>(rng.index(t));
      Vector anchor = centers[first];
      inst.judgments.set(i, first, true);
      if (t > 1 && rng.uniform() < 0.5) {
        int second = static_cast<int>(rng.index(t - 1));
        if (second >= first) ++second;
        inst.judgments.set(i, second, true);
        anchor += centers[second];
        if (anchor.norm() > 0.0) anchor.normalize();
      }
      if (cfg.subtopic_noise_scale == 0.0) {
        doc.embedding = anchor;
        continue;
      }
      Vector noise(d);
      for (int k = 0; k < d; ++k) noise[k] = rng.normal();
      Vector placed = anchor + cfg.subtopic_noise_scale * noise;
      const double norm = placed.norm();
      doc.embedding = norm > 0.0 ? Vector(placed / norm) : anchor;
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

std::vector<FoldPartition> split_folds(std::size_t n_queries, int n_folds, std::uint64_t seed) {
  if (n_folds < 3) throw ArgumentError("n_folds must be at least 3");
  if (n_queries < static_cast<std::size_t>(n_folds)) {
    throw ArgumentError("fewer queries (" + std::to_string(n_queries) + ") than folds (" +
                        std::to_string(n_folds) + ")");
  }
  std::vector<std::size_t> perm(n_queries);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng.engine());

  const std::size_t k = static_cast<std::size_t>(n_folds);
  std::vector<std::vector<std::size_t>> subsets(k);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t len = n_queries / k + (i < n_queries % k ? 1 : 0);
    subsets[i].assign(perm.begin() + pos, perm.begin() + pos + len);
    pos += len;
  }

  std::vector<FoldPartition> folds(k);
  for (std::size_t i = 0; i < k; ++i) {
    folds[i].test = subsets[i];
    folds[i].validation = subsets[(i + 1) % k];
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i || j == (i + 1) % k) continue;
      folds[i].train.insert(folds[i].train.end(), subsets[j].begin(), subsets[j].end());
    }
  }
  return folds;
}

std::vector<FoldPartition> split_folds(const Dataset& dataset, int n_folds, std::uint64_t seed) {
  return split_folds(dataset.size(), n_folds, seed);
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
  Dataset out;
  out.dimension = dataset.dimension;
  out.instances.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= dataset.size()) throw ArgumentError("subset index out of range");
    out.instances.push_back(dataset.instances[i]);
  }
  return out;
}

}  // namespace divrank
