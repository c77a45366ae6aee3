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

// Dataset model: queries, candidate documents, binary subtopic judgments.
// Also JSONL ingestion, fold splitting and the synthetic corpus generator.

#ifndef DIVRANK_CORPUS_HPP
#define DIVRANK_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace divrank {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Query {
  std::string id;
  Vector embedding;
  int subtopic_count = 1;
};

struct Document {
  std::string id;
  Vector embedding;
};

/// M x T binary matrix; row i holds the subtopics covered by document i.
class JudgmentMatrix {
 public:
  JudgmentMatrix() = default;
  JudgmentMatrix(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool operator()(int doc, int subtopic) const {
    return entries_[static_cast<std::size_t>(doc) * cols_ + subtopic] != 0;
  }
  void set(int doc, int subtopic, bool value);

  /// True when the document covers no subtopic.
  bool row_is_zero(int doc) const;
  int nonzero_rows() const;

  bool operator==(const JudgmentMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> entries_;
};

struct QueryInstance {
  Query query;
  std::vector<Document> documents;
  JudgmentMatrix judgments;

  int size() const { return static_cast<int>(documents.size()); }
  int dimension() const { return static_cast<int>(query.embedding.size()); }
  int subtopics() const { return query.subtopic_count; }
  const Vector& embedding(int doc) const { return documents[doc].embedding; }
};

struct Dataset {
  std::vector<QueryInstance> instances;
  int dimension = 0;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

/// Throws DimensionError or IntegrityError on the first broken invariant.
void validate(const QueryInstance& instance, int dimension);
void validate(const Dataset& dataset);

/// Parses the JSONL format: one query instance per line, blank lines ignored.
Dataset parse_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

/// Canonical JSONL form. Keys appear in the documented order and reals are
/// printed with round-trip precision.
void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string dataset_to_string(const Dataset& dataset);

/// 64-bit FNV-1a of the canonical serialization.
std::uint64_t dataset_fingerprint(const Dataset& dataset);

struct SyntheticConfig {
  int n_queries = 50;
  int docs_per_query = 100;
  int subtopics = 8;
  int dimension = 16;
  double relevant_fraction = 0.3;
  double subtopic_noise_scale = 0.2;
  /// How far subtopic centers stray from the query's topic direction; the
  /// expected center-topic cosine is about 1 / sqrt(1 + spread^2).
  double subtopic_spread = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Subtopic centers on the unit sphere; ceil(relevant_fraction * M) documents
/// sit near the centers of the 1-2 subtopics they cover, the rest are uniform
/// on the sphere with empty judgment rows.
Dataset generate_synthetic(const SyntheticConfig& config);

struct FoldPartition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded permutation cut into n_folds near-even subsets. Fold i tests on
/// subset i, validates on subset (i + 1) mod n_folds, trains on the rest.
std::vector<FoldPartition> split_folds(std::size_t n_queries, int n_folds,
                                       std::uint64_t seed);
std::vector<FoldPartition> split_folds(const Dataset& dataset, int n_folds,
                                       std::uint64_t seed);

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace divrank

#endif  // DIVRANK_CORPUS_HPP
