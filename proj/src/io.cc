// src/io.cc

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

#include "embedspace/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "byte_io.h"
#include "embedspace/error.h"

namespace embedspace {
namespace {

constexpr std::string_view kEmbeddingMagic = "EMB1";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Calls fn(line, line_number) for every line that is not blank.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!split_whitespace(line).empty()) fn(line, line_no);
    if (end == text.size()) break;
    start = end + 1;
  }
}

std::string format_sig9(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string serialize_binary(const EmbeddingSet& set) {
  internal::ByteWriter w;
  w.raw(kEmbeddingMagic);
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.u64(set.size());
  for (const Embedding& e : set) {
    w.str16(e.utt_id);
    w.str16(e.speaker_id);
    w.str16(e.dataset_id);
    for (Eigen::Index i = 0; i < e.vector.size(); ++i) w.f32(static_cast<float>(e.vector(i)));
  }
  return w.take();
}

EmbeddingSet parse_binary(std::string_view bytes) {
  internal::ByteReader r(bytes, "embedding file");
  if (bytes.size() < 16) fail(ErrorCode::kParse, "embedding file: malformed header (shorter than 16 bytes)");
  r.expect_magic(kEmbeddingMagic);
  const std::uint32_t dim = r.u32();
  const std::uint64_t count = r.u64();
  if (dim == 0 && count > 0) fail(ErrorCode::kParse, "embedding file: malformed header (dim 0 with records)");
  EmbeddingSet set(dim);
  for (std::uint64_t k = 0; k < count; ++k) {
    Embedding e;
    try {
      e.utt_id = r.str16();
      e.speaker_id = r.str16();
      e.dataset_id = r.str16();
      e.vector.resize(dim);
      for (std::uint32_t i = 0; i < dim; ++i) e.vector(i) = r.f32();
      set.add(std::move(e));
    } catch (const Error& err) {
      fail(err.code(), "embedding file record " + std::to_string(k + 1) + ": " + err.what());
    }
  }
  r.expect_end();
  return set;
}

std::string serialize_tsv(const EmbeddingSet& set) {
  std::string out;
  for (const Embedding& e : set) {
    out += e.utt_id;
    out += '\t';
    out += e.speaker_id;
    out += '\t';
    out += e.dataset_id;
    out += '\t';
    for (Eigen::Index i = 0; i < e.vector.size(); ++i) {
      if (i > 0) out += ',';
      out += format_sig9(e.vector(i));
    }
    out += '\n';
  }
  return out;
}

EmbeddingSet parse_tsv(std::string_view text) {
  EmbeddingSet set;
  std::size_t record = 0;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    ++record;
    const std::string where = "line " + std::to_string(line_no);
    auto fields = split(line, '\t');
    if (fields.size() != 4)
      fail(ErrorCode::kParse, "embedding tsv " + where + ": expected 4 tab-separated fields, got " +
                                  std::to_string(fields.size()));
    auto values = split(fields[3], ',');
    Embedding e{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                Vector(static_cast<Eigen::Index>(values.size()))};
    for (std::size_t i = 0; i < values.size(); ++i) e.vector(i) = parse_double(values[i], where);
    if (set.size() > 0 && static_cast<std::size_t>(e.vector.size()) != set.dim())
      fail(ErrorCode::kDimension, "dimension mismatch at record " + std::to_string(record) + " (" +
                                      where + "): expected " + std::to_string(set.dim()) +
                                      ", got " + std::to_string(e.vector.size()));
    try {
      set.add(std::move(e));
    } catch (const Error& err) {
      fail(err.code(), "embedding tsv " + where + ": " + err.what());
    }
  });
  return set;
}

TrialLabel parse_label(std::string_view token, std::size_t line_no) {
  if (token == "target") return TrialLabel::kTarget;
  if (token == "nontarget") return TrialLabel::kNontarget;
  if (token == "unknown") return TrialLabel::kUnknown;
  fail(ErrorCode::kParse, "trials line " + std::to_string(line_no) + ": unknown label '" +
                              std::string(token) + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::string_view context) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (token.empty() || res.ec != std::errc() || res.ptr != last)
    fail(ErrorCode::kParse, std::string(context) + ": cannot parse number '" + std::string(token) + "'");
  if (!std::isfinite(v))
    fail(ErrorCode::kNumeric, std::string(context) + ": non-finite value '" + std::string(token) + "'");
  return v;
}

EmbeddingFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".tsv" || ext == ".txt") ? EmbeddingFormat::kTsv : EmbeddingFormat::kBinary;
}

EmbeddingFormat parse_format_name(std::string_view name) {
  if (name == "binary" || name == "bin") return EmbeddingFormat::kBinary;
  if (name == "tsv") return EmbeddingFormat::kTsv;
  fail(ErrorCode::kInvalidArgument, "unknown embedding format '" + std::string(name) + "'");
}

std::string serialize_embeddings(const EmbeddingSet& set, EmbeddingFormat format) {
  return format == EmbeddingFormat::kBinary ? serialize_binary(set) : serialize_tsv(set);
}

EmbeddingSet parse_embeddings(std::string_view bytes, EmbeddingFormat format) {
  return format == EmbeddingFormat::kBinary ? parse_binary(bytes) : parse_tsv(bytes);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIo, "error reading '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorCode::kIo, "error writing '" + path.string() + "'");
}

EmbeddingSet read_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  try {
    return parse_embeddings(read_file(path), format);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::kIo) throw;
    fail(err.code(), path.string() + ": " + err.what());
  }
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                      EmbeddingFormat format) {
  write_file(path, serialize_embeddings(set, format));
}

std::string serialize_trials(const TrialList& trials) {
  std::string out;
  for (const Trial& t : trials) {
    out += t.enroll_id;
    out += ' ';
    out += t.test_id;
    if (t.label != TrialLabel::kUnknown) {
      out += ' ';
      out += trial_label_name(t.label);
    }
    out += '\n';
  }
  return out;
}

TrialList parse_trials(std::string_view text) {
  TrialList trials;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto tok = split_whitespace(line);
    if (tok.size() != 2 && tok.size() != 3)
      fail(ErrorCode::kParse, "trials line " + std::to_string(line_no) +
                                  ": expected 'enroll test [label]'");
    TrialLabel label = tok.size() == 3 ? parse_label(tok[2], line_no) : TrialLabel::kUnknown;
    trials.add({std::string(tok[0]), std::string(tok[1]), label});
  });
  return trials;
}

TrialList read_trials(const std::filesystem::path& path) { return parse_trials(read_file(path)); }

void write_trials(const TrialList& trials, const std::filesystem::path& path) {
  write_file(path, serialize_trials(trials));
}

std::string serialize_scores(const ScoreSet& scores) {
  scores.validate();
  std::string out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += scores.trials[i].enroll_id;
    out += ' ';
    out += scores.trials[i].test_id;
    out += ' ';
    out += format_double(scores.scores[i]);
    out += '\n';
  }
  return out;
}

ScoreSet parse_scores(std::string_view text) {
  ScoreSet s;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto tok = split_whitespace(line);
    if (tok.size() != 3)
      fail(ErrorCode::kParse, "scores line " + std::to_string(line_no) +
                                  ": expected 'enroll test score'");
    s.trials.add({std::string(tok[0]), std::string(tok[1]), TrialLabel::kUnknown});
    s.scores.push_back(parse_double(tok[2], "scores line " + std::to_string(line_no)));
  });
  return s;
}

ScoreSet attach_labels(const ScoreSet& scores, const TrialList& labels) {
  if (scores.size() != labels.size())
    fail(ErrorCode::kDimension, "score count " + std::to_string(scores.size()) +
                                    " does not match trial list count " +
                                    std::to_string(labels.size()));
  ScoreSet out = scores;
  TrialList relabeled;
  for (const Trial& t : scores.trials) {
    std::size_t k = labels.find(t.enroll_id, t.test_id);
    if (k == TrialList::npos)
      fail(ErrorCode::kLookup, "scored pair (" + t.enroll_id + ", " + t.test_id +
                                   ") is not in the trial list");
    relabeled.add({t.enroll_id, t.test_id, labels[k].label});
  }
  out.trials = std::move(relabeled);
  return out;
}

ScoreSet parse_scores(std::string_view text, const TrialList& labels) {
  return attach_labels(parse_scores(text), labels);
}

ScoreSet read_scores(const std::filesystem::path& path) { return parse_scores(read_file(path)); }

ScoreSet read_scores(const std::filesystem::path& path, const TrialList& labels) {
  return parse_scores(read_file(path), labels);
}

void write_scores(const ScoreSet& scores, const std::filesystem::path& path) {
  write_file(path, serialize_scores(scores));
}

}  // namespace embedspace
