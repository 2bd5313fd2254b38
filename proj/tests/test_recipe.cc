// tests/test_recipe.cc

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

#include <filesystem>

#include "doctest.h"
#include "embedspace/error.h"
#include "embedspace/io.h"
#include "embedspace/parallel.h"
#include "embedspace/recipe.h"
#include "embedspace/synth.h"

using namespace embedspace;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "embedspace_test_recipe" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char* kSynthData =
    "synth role=train dim=8 speakers=60 utts=5 seed=1 between=isotropic:1 within=isotropic:0.5\n"
    "synth role=indomain dim=8 speakers=40 utts=3 seed=2 unlabeled=1 dataset=indomain "
    "speaker_prefix=ind shift_matrix=diag:2,1,1,1,1,1,1,0.5\n"
    "synth role=cohort dim=8 speakers=40 utts=2 seed=3 speaker_prefix=coh\n"
    "synth role=test dim=8 speakers=30 utts=4 seed=4 speaker_prefix=tst\n"
    "make-trials from=test targets=150 nontargets=600 seed=5\n";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("minimal chain runs and reports three metrics") {
  const Recipe r = parse_recipe(std::string(kSynthData) + "lengthnorm\ncosine\nevaluate profile=cmn2\n");
  const RecipeReport rep = run_recipe(r, fresh_dir("minimal"));
  CHECK(rep.evaluated);
  CHECK(rep.metrics.eer > 0.0);
  CHECK(rep.metrics.eer < 0.5);
  CHECK(rep.metrics_line == format_metrics_line(rep.metrics));
  CHECK(rep.chain == "cosine similarity");
}

TEST_CASE("stage order validation") {
  auto order = [](const std::string& body) {
    return code_of([&] { validate_recipe(parse_recipe(std::string(kSynthData) + body)); });
  };
  CHECK(order("asnorm2\ncosine\nevaluate\n") == ErrorCode::kOrder);
  CHECK(order("cosine\nplda\n") == ErrorCode::kOrder);
  CHECK(order("lengthnorm\nevaluate\n") == ErrorCode::kOrder);
  CHECK(order("cosine\nevaluate\ncalibrate\n") == ErrorCode::kOrder);
  CHECK(order("cosine\nlengthnorm\n") == ErrorCode::kOrder);
  CHECK(order("cosine\nasnorm1\nasnorm2\n") == ErrorCode::kOrder);
  CHECK(order("cosine\ncalibrate\nasnorm1\n") == ErrorCode::kOrder);
  CHECK_NOTHROW(validate_recipe(parse_recipe(std::string(kSynthData) + "cosine\nasnorm1\ncalibrate\nevaluate\n")));
  // The runner validates before touching the workdir.
  const fs::path d = fresh_dir("order") / "never";
  CHECK(code_of([&] { run_recipe(parse_recipe("asnorm1\ncosine\n"), d); }) == ErrorCode::kOrder);
  CHECK_FALSE(fs::exists(d));
}

TEST_CASE("parse errors") {
  CHECK(code_of([] { parse_recipe("frobnicate\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_recipe("lda size=3\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_recipe("lda dim\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_recipe("lda dim=2 dim=3\n"); }) == ErrorCode::kParse);
  const Recipe r = parse_recipe("# comment\n\n  lda dim=3   # trailing\n");
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].line == 3);
  CHECK(r.stages[0].params.at("dim") == "3");
}

TEST_CASE("missing roles name the stage") {
  const Recipe r = parse_recipe(
      "synth role=test dim=4 speakers=10 utts=3 seed=1\nmake-trials targets=10 nontargets=10\n"
      "lda dim=2\ncosine\n");
  try {
    run_recipe(r, fresh_dir("missing"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLookup);
    CHECK(std::string(e.what()).find("lda") != std::string::npos);
    CHECK(std::string(e.what()).find("train") != std::string::npos);
  }
  const Recipe no_trials = parse_recipe("synth role=test dim=4 speakers=10 utts=3 seed=1\ncosine\n");
  CHECK(code_of([&] { run_recipe(no_trials, fresh_dir("missing2")); }) == ErrorCode::kLookup);
}

TEST_CASE("full chain label, rerun determinism and overwrite protection") {
  const std::string text = std::string(kSynthData) +
                           "center\nlda dim=6\ncoral\nwhiten\nlengthnorm\nplda iters=5\n"
                           "asnorm2 top_k=30\ncalibrate prior=0.01\nevaluate profile=cmn2\n";
  const Recipe r = parse_recipe(text);
  CHECK(recipe_chain_label(r) == "LDA + CORAL + inW + PLDA, AS-Norm2");
  const fs::path d = fresh_dir("full");
  const RecipeReport a = run_recipe(r, d);
  const auto first = snapshot(d);
  CHECK(first.count("final-scores.txt") == 1);
  CHECK(first.count("report.txt") == 1);
  CHECK(first.size() == a.artifacts.size());
  const RecipeReport b = run_recipe(r, d);
  CHECK(a.metrics_line == b.metrics_line);
  CHECK(snapshot(d) == first);

  // Different thread count, separate directory: byte-identical artifacts.
  set_num_threads(3);
  const fs::path d3 = fresh_dir("full3");
  run_recipe(r, d3);
  set_num_threads(1);
  CHECK(snapshot(d3) == first);

  // A changed recipe must not silently replace report.txt.
  const Recipe changed = parse_recipe(std::string(kSynthData) + "lengthnorm\ncosine\nevaluate\n");
  CHECK(code_of([&] { run_recipe(changed, d); }) == ErrorCode::kExists);
  RecipeOptions force;
  force.force = true;
  CHECK_NOTHROW(run_recipe(changed, d, force));
}

TEST_CASE("file inputs resolve against the recipe directory") {
  const fs::path d = fresh_dir("files");
  SynthConfig c;
  c.dim = 4;
  c.n_speakers = 20;
  c.utts_per_speaker = 4;
  c.between_cov = Matrix::Identity(4, 4);
  c.within_cov = Matrix::Identity(4, 4);
  c.seed = 3;
  const EmbeddingSet s = generate(c);
  write_embeddings(s, d / "data.tsv", EmbeddingFormat::kTsv);
  write_trials(make_trials(s, 40, 100, 1), d / "trials.txt");
  write_file(d / "r.txt", "input role=test path=data.tsv\ntrials path=trials.txt\ncosine\ncalibrate\n"
                          "fuse with=other.txt\nevaluate profile=vast\n");
  // Fusing with an identical calibrated system doubles the scores.
  const RecipeReport once = run_recipe(parse_recipe("input role=test path=" + (d / "data.tsv").string() +
                                                    "\ntrials path=" + (d / "trials.txt").string() +
                                                    "\ncosine\ncalibrate\n"),
                                       d / "w1");
  fs::copy_file(d / "w1" / "final-scores.txt", d / "other.txt");
  const RecipeReport fused = run_recipe(d / "r.txt", d / "w2");
  CHECK(fused.evaluated);
  const ScoreSet a = read_scores(d / "w1" / "final-scores.txt");
  const ScoreSet b = read_scores(d / "w2" / "final-scores.txt");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.scores[i] == 2 * a.scores[i]);
  CHECK_FALSE(once.evaluated);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
