// include/embedspace/synth.h

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

#ifndef EMBEDSPACE_SYNTH_H_
#define EMBEDSPACE_SYNTH_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "embedspace/data_model.h"

namespace embedspace {

struct AffineShift {
  Matrix matrix;
  Vector offset;
};

/// Parameters of the generative model x = mean + y_s + e with
/// y_s ~ N(0, between_cov) per speaker and e ~ N(0, within_cov) per
/// utterance, optionally followed by x <- A x + b.
struct SynthConfig {
  int dim = 0;
  int n_speakers = 0;
  int utts_per_speaker = 0;
  Matrix between_cov;
  Matrix within_cov;
  Vector global_mean;  // empty means zeros
  std::optional<AffineShift> shift;
  std::uint64_t seed = 0;
  /// Seed of the utterance-noise streams; defaults to `seed`. Two configs that
  /// differ only here share speaker factors but draw independent noise.
  std::optional<std::uint64_t> noise_seed;
  std::string speaker_prefix = "spk";
  /// Empty selects "synth", or "shifted" when a shift is present.
  std::string dataset_id;
  /// Emit speaker_id "unknown" for every record.
  bool unlabeled = false;

  void validate() const;
};

/// Parses the flat `key = value` config format. Keys: dim, speakers, utts,
/// between, within, mean, shift_matrix, shift_offset, seed, noise_seed,
/// speaker_prefix, dataset, unlabeled. Matrices are `isotropic:<v>`,
/// `diag:<v1,...>` or `full:<row-major values>`; vectors are `zeros`,
/// `constant:<v>` or a comma list. `#` starts a comment. Later keys win.
SynthConfig parse_synth_config(std::string_view text);

/// Deterministic given the config. Speaker s draws its factor from stream
/// (seed, 2s) and its utterance noise from stream (noise_seed, 2s+1), so
/// parallel generation matches sequential generation exactly.
EmbeddingSet generate(const SynthConfig& cfg);

/// Labeled target/nontarget pairs over the set's records, no duplicates,
/// enroll before test in file order. Deterministic given the seed.
TrialList make_trials(const EmbeddingSet& set, std::size_t n_target, std::size_t n_nontarget,
                      std::uint64_t seed);

/// Standard normal stream: mt19937_64 uniforms (53-bit) into Box-Muller.
/// Fully specified so samples are identical on every platform.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream);
  double next();
  Vector next_vector(Eigen::Index n);
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Factor f with f f' = cov, via eigen-decomposition. Throws unless cov is
/// symmetric PSD (eigenvalues >= -1e-10 * max(1, |largest|)).
Matrix psd_factor(const Matrix& cov, const char* what);

}  // namespace embedspace

#endif  // EMBEDSPACE_SYNTH_H_
