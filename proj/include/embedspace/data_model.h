// include/embedspace/data_model.h

// Copyright 2026 The embedspace Authors

// See COPYING in the top-level directory for clarification regarding
// multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMBEDSPACE_DATA_MODEL_H_
#define EMBEDSPACE_DATA_MODEL_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace embedspace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Speaker id marking unlabeled records.
inline constexpr std::string_view kUnknownSpeaker = "unknown";

struct Embedding {
  std::string utt_id;
  std::string speaker_id;
  std::string dataset_id;
  Vector vector;

  bool labeled() const { return speaker_id != kUnknownSpeaker; }
};

/// Ordered collection of embeddings sharing one dimension. Records keep
/// insertion (file) order; utt ids are unique and every value is finite.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim) : dim_(dim) {}

  /// Appends a record, validating dimension, finiteness and id uniqueness.
  void add(Embedding record);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Embedding& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<Embedding>& records() const { return records_; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  /// Returns nullptr when the id is absent.
  const Embedding* find(std::string_view utt_id) const;
  const Embedding& at(std::string_view utt_id) const;

  /// Data as a D x N matrix, one column per record.
  Matrix as_columns() const;

  /// Copy of this set with every vector replaced; `vectors` must be aligned
  /// with the records. The result dimension is taken from the vectors.
  EmbeddingSet with_vectors(std::vector<Vector> vectors) const;

  bool operator==(const EmbeddingSet& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Embedding> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Records grouped by speaker in order of first appearance. Throws if any
/// record is unlabeled.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_speaker(
    const EmbeddingSet& set, std::string_view purpose);

enum class TrialLabel { kTarget, kNontarget, kUnknown };

std::string_view trial_label_name(TrialLabel label);

struct Trial {
  std::string enroll_id;
  std::string test_id;
  TrialLabel label = TrialLabel::kUnknown;
};

/// Trials with unique (enroll, test) pairs.
class TrialList {
 public:
  void add(Trial trial);

  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const Trial& operator[](std::size_t i) const { return trials_[i]; }
  auto begin() const { return trials_.begin(); }
  auto end() const { return trials_.end(); }

  /// Index of the pair, or npos.
  std::size_t find(std::string_view enroll_id, std::string_view test_id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  bool operator==(const TrialList& other) const;

 private:
  static std::string key(std::string_view enroll_id, std::string_view test_id);

  std::vector<Trial> trials_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Scores aligned index-by-index with a trial list.
struct ScoreSet {
  TrialList trials;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  /// Checks alignment and finiteness.
  void validate() const;
};

}  // namespace embedspace

#endif  // EMBEDSPACE_DATA_MODEL_H_
