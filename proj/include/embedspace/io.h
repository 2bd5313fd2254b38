// include/embedspace/io.h

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

#ifndef EMBEDSPACE_IO_H_
#define EMBEDSPACE_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "embedspace/data_model.h"

namespace embedspace {

// Binary embeddings ("EMB1"): little-endian u32 dim, u64 count, then per
// record three u16-length-prefixed utf-8 ids (utt, speaker, dataset) followed
// by dim f32 values.
//
// TSV embeddings: `utt_id \t speaker_id \t dataset_id \t v1,v2,...`, values
// written with 9 significant digits.
enum class EmbeddingFormat { kBinary, kTsv };

/// `.tsv` and `.txt` map to TSV, everything else to binary.
EmbeddingFormat format_from_path(const std::filesystem::path& path);
EmbeddingFormat parse_format_name(std::string_view name);

std::string serialize_embeddings(const EmbeddingSet& set, EmbeddingFormat format);
EmbeddingSet parse_embeddings(std::string_view bytes, EmbeddingFormat format);

EmbeddingSet read_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                      EmbeddingFormat format);

// Trials: `enroll_id test_id [target|nontarget|unknown]` per line.
std::string serialize_trials(const TrialList& trials);
TrialList parse_trials(std::string_view text);
TrialList read_trials(const std::filesystem::path& path);
void write_trials(const TrialList& trials, const std::filesystem::path& path);

// Scores: `enroll_id test_id score` per line, scores in shortest round-trip
// decimal form. Labels are not stored; the labeled overloads align the file
// against a trial list and copy its labels.
std::string serialize_scores(const ScoreSet& scores);
ScoreSet parse_scores(std::string_view text);
ScoreSet parse_scores(std::string_view text, const TrialList& labels);
ScoreSet read_scores(const std::filesystem::path& path);
ScoreSet read_scores(const std::filesystem::path& path, const TrialList& labels);
void write_scores(const ScoreSet& scores, const std::filesystem::path& path);

/// Copies trial labels from `labels` into `scores` by (enroll, test) pair.
/// Both must contain the same pairs.
ScoreSet attach_labels(const ScoreSet& scores, const TrialList& labels);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
/// Locale-independent parse of a full token; throws kParse naming `context`.
double parse_double(std::string_view token, std::string_view context);

}  // namespace embedspace

#endif  // EMBEDSPACE_IO_H_
