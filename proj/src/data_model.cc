// src/data_model.cc

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

#include "embedspace/data_model.h"

#include <cmath>

#include "embedspace/error.h"

namespace embedspace {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kLookup: return "lookup";
    case ErrorCode::kOrder: return "order";
    case ErrorCode::kExists: return "exists";
  }
  return "unknown";
}

void EmbeddingSet::add(Embedding record) {
  const auto n = static_cast<std::size_t>(record.vector.size());
  if (records_.empty() && dim_ == 0) dim_ = n;
  require(n >= 1, ErrorCode::kDimension, "embedding '" + record.utt_id + "' is empty");
  if (n != dim_)
    fail(ErrorCode::kDimension, "dimension mismatch at record " +
                                    std::to_string(records_.size() + 1) + ": expected " +
                                    std::to_string(dim_) + ", got " + std::to_string(n));
  require(record.vector.allFinite(), ErrorCode::kNumeric,
          "non-finite value in embedding '" + record.utt_id + "'");
  require(!record.utt_id.empty(), ErrorCode::kInvalidArgument,
          "empty utt_id at record " + std::to_string(records_.size() + 1));
  auto [it, inserted] = index_.emplace(record.utt_id, records_.size());
  if (!inserted)
    fail(ErrorCode::kInvalidArgument, "duplicate utt_id '" + record.utt_id + "' at record " +
                                          std::to_string(records_.size() + 1));
  records_.push_back(std::move(record));
}

const Embedding* EmbeddingSet::find(std::string_view utt_id) const {
  auto it = index_.find(std::string(utt_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const Embedding& EmbeddingSet::at(std::string_view utt_id) const {
  const Embedding* e = find(utt_id);
  if (e == nullptr) fail(ErrorCode::kLookup, "unknown utterance id '" + std::string(utt_id) + "'");
  return *e;
}

Matrix EmbeddingSet::as_columns() const {
  Matrix m(dim_, records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) m.col(i) = records_[i].vector;
  return m;
}

EmbeddingSet EmbeddingSet::with_vectors(std::vector<Vector> vectors) const {
  require(vectors.size() == records_.size(), ErrorCode::kDimension,
          "vector count does not match record count");
  EmbeddingSet out(vectors.empty() ? dim_ : static_cast<std::size_t>(vectors.front().size()));
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const Embedding& r = records_[i];
    out.add({r.utt_id, r.speaker_id, r.dataset_id, std::move(vectors[i])});
  }
  return out;
}

bool EmbeddingSet::operator==(const EmbeddingSet& other) const {
  if (dim_ != other.dim_ || records_.size() != other.records_.size()) return false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const Embedding& a = records_[i];
    const Embedding& b = other.records_[i];
    if (a.utt_id != b.utt_id || a.speaker_id != b.speaker_id || a.dataset_id != b.dataset_id ||
        a.vector != b.vector)
      return false;
  }
  return true;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_speaker(
    const EmbeddingSet& set, std::string_view purpose) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Embedding& e = set[i];
    if (!e.labeled())
      fail(ErrorCode::kInvalidArgument, std::string(purpose) + " needs speaker labels; record '" +
                                            e.utt_id + "' is unlabeled");
    auto [it, inserted] = slot.emplace(e.speaker_id, groups.size());
    if (inserted) groups.push_back({e.speaker_id, {}});
    groups[it->second].second.push_back(i);
  }
  return groups;
}

std::string_view trial_label_name(TrialLabel label) {
  switch (label) {
    case TrialLabel::kTarget: return "target";
    case TrialLabel::kNontarget: return "nontarget";
    case TrialLabel::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string TrialList::key(std::string_view enroll_id, std::string_view test_id) {
  std::string k;
  k.reserve(enroll_id.size() + test_id.size() + 1);
  k.append(enroll_id);
  k.push_back('\0');
  k.append(test_id);
  return k;
}

void TrialList::add(Trial trial) {
  auto [it, inserted] = index_.emplace(key(trial.enroll_id, trial.test_id), trials_.size());
  if (!inserted)
    fail(ErrorCode::kInvalidArgument, "duplicate trial pair (" + trial.enroll_id + ", " +
                                          trial.test_id + ") at trial " +
                                          std::to_string(trials_.size() + 1));
  trials_.push_back(std::move(trial));
}

std::size_t TrialList::find(std::string_view enroll_id, std::string_view test_id) const {
  auto it = index_.find(key(enroll_id, test_id));
  return it == index_.end() ? npos : it->second;
}

bool TrialList::operator==(const TrialList& other) const {
  if (trials_.size() != other.trials_.size()) return false;
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    const Trial& a = trials_[i];
    const Trial& b = other.trials_[i];
    if (a.enroll_id != b.enroll_id || a.test_id != b.test_id || a.label != b.label) return false;
  }
  return true;
}

void ScoreSet::validate() const {
  require(scores.size() == trials.size(), ErrorCode::kDimension,
          "score count " + std::to_string(scores.size()) + " does not match trial count " +
              std::to_string(trials.size()));
  for (std::size_t i = 0; i < scores.size(); ++i)
    require(std::isfinite(scores[i]), ErrorCode::kNumeric,
            "non-finite score for trial " + std::to_string(i + 1));
}

}  // namespace embedspace
