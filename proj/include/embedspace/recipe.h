// include/embedspace/recipe.h

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

#ifndef EMBEDSPACE_RECIPE_H_
#define EMBEDSPACE_RECIPE_H_

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "embedspace/metrics.h"

namespace embedspace {

/// One `stage key=value ...` line.
struct RecipeStage {
  std::string name;
  std::map<std::string, std::string> params;
  std::size_t line = 0;
};

struct Recipe {
  std::vector<RecipeStage> stages;
  /// Relative paths in stage parameters resolve against this directory.
  std::filesystem::path base_dir;
};

/// Parses the flat recipe format; `#` starts a comment. Stage names and
/// parameter keys are checked here, stage order by validate_recipe.
Recipe parse_recipe(std::string_view text, const std::filesystem::path& base_dir = {});
Recipe read_recipe(const std::filesystem::path& path);

/// Data stages (input, synth, trials, make-trials) first, then transforms,
/// exactly one scorer (plda or cosine), at most one asnorm, then calibrate /
/// fuse, evaluate last. Violations throw ErrorCode::kOrder.
void validate_recipe(const Recipe& recipe);

/// Back-end label in the "LDA + CORAL + inW + PLDA, AS-Norm2" style.
std::string recipe_chain_label(const Recipe& recipe);

struct RecipeOptions {
  /// Replace artifacts whose content differs from the file on disk.
  bool force = false;
  std::function<void(const std::string&)> log;
};

struct RecipeArtifact {
  std::string stage;
  std::filesystem::path path;
};

struct RecipeReport {
  std::string chain;
  bool evaluated = false;
  DetectionMetrics metrics;
  /// `EER[%] / minC / actC`, empty without an evaluate stage.
  std::string metrics_line;
  std::vector<RecipeArtifact> artifacts;
};

/// Runs every stage, writing artifacts into `workdir` as
/// `NN-stage-<fnv1a64>.ext` plus final-scores.txt and report.txt.
/// Stage errors are rethrown with their code, prefixed by the stage.
RecipeReport run_recipe(const Recipe& recipe, const std::filesystem::path& workdir,
                        const RecipeOptions& options = {});
RecipeReport run_recipe(const std::filesystem::path& recipe_path,
                        const std::filesystem::path& workdir, const RecipeOptions& options = {});

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace embedspace

#endif  // EMBEDSPACE_RECIPE_H_
