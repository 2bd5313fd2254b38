// tests/test_capi.cc

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

// Exercises libembedspace through its C header only.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "embedspace/embedspace.h"

namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "embedspace_test_capi";
  fs::create_directories(d);
  return (d / name).string();
}

const char* kConfig = "dim = 4\nspeakers = 40\nutts = 5\nseed = 11\nwithin = isotropic:0.5\n";

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::string(es_status_name(ES_OK)) == "ok");
  CHECK(std::string(es_status_name(ES_ERR_ORDER)) == "order");
  CHECK(std::string(es_status_name(ES_ERR_INTERNAL)) == "internal");
  es_embeddings* e = nullptr;
  CHECK(es_embeddings_read("/nonexistent/x.emb", nullptr, &e) == ES_ERR_IO);
  CHECK(e == nullptr);
  CHECK(std::strlen(es_last_error()) > 0);
  CHECK(es_synth(kConfig, &e) == ES_OK);
  CHECK(std::strlen(es_last_error()) == 0);
  es_embeddings_free(e);
  CHECK(es_synth(nullptr, &e) == ES_ERR_INVALID_ARGUMENT);
  CHECK(es_set_threads(0) == ES_ERR_INVALID_ARGUMENT);
}

TEST_CASE("embeddings through the C API") {
  es_embeddings* s = nullptr;
  REQUIRE(es_embeddings_create(3, &s) == ES_OK);
  const double v[3] = {3, 4, 0};
  CHECK(es_embeddings_add(s, "u1", "spk", "d", v, 3) == ES_OK);
  CHECK(es_embeddings_add(s, "u1", "spk", "d", v, 3) == ES_ERR_INVALID_ARGUMENT);
  CHECK(es_embeddings_add(s, "u2", "spk", "d", v, 2) == ES_ERR_DIMENSION);
  CHECK(es_embeddings_count(s) == 1);
  CHECK(std::string(es_embeddings_utt_id(s, 0)) == "u1");
  CHECK(es_embeddings_utt_id(s, 5) == nullptr);

  es_embeddings* n = nullptr;
  REQUIRE(es_length_normalize(s, &n) == ES_OK);
  double out[3];
  REQUIRE(es_embeddings_vector(n, 0, out, 3) == ES_OK);
  CHECK(out[0] == doctest::Approx(0.6));

  const std::string path = scratch("s.emb");
  REQUIRE(es_embeddings_write(n, path.c_str(), nullptr) == ES_OK);
  es_embeddings* back = nullptr;
  REQUIRE(es_embeddings_read(path.c_str(), "binary", &back) == ES_OK);
  // Storage is f32: a second write is byte-identical, values agree to f32 precision.
  CHECK_FALSE(es_embeddings_equal(back, n));
  CHECK(es_embeddings_equal(back, back));
  double again[3];
  REQUIRE(es_embeddings_vector(back, 0, again, 3) == ES_OK);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(again[i] - out[i]) < 1e-7);
  const std::string path2 = scratch("s2.emb");
  REQUIRE(es_embeddings_write(back, path2.c_str(), "binary") == ES_OK);
  es_embeddings* back2 = nullptr;
  REQUIRE(es_embeddings_read(path2.c_str(), nullptr, &back2) == ES_OK);
  CHECK(es_embeddings_equal(back2, back));
  es_embeddings_free(back2);
  es_embeddings_free(back);
  es_embeddings_free(n);
  es_embeddings_free(s);
}

TEST_CASE("end-to-end pipeline through the C API") {
  es_embeddings* train = nullptr;
  REQUIRE(es_synth(kConfig, &train) == ES_OK);
  es_trials* trials = nullptr;
  REQUIRE(es_make_trials(train, 100, 400, 3, &trials) == ES_OK);

  const es_embeddings* sets[] = {train};
  es_dataset_means* means = nullptr;
  REQUIRE(es_fit_centering(sets, 1, &means) == ES_OK);
  es_embeddings* centered = nullptr;
  REQUIRE(es_apply_centering(train, means, 1, &centered) == ES_OK);

  es_transform* lda = nullptr;
  REQUIRE(es_fit_lda(centered, 3, &lda) == ES_OK);
  CHECK(std::string(es_transform_kind(lda)) == "lda");
  CHECK(es_transform_out_dim(lda) == 3);
  es_transform* coral = nullptr;
  es_embeddings* projected = nullptr;
  REQUIRE(es_transform_apply(lda, centered, &projected) == ES_OK);
  REQUIRE(es_fit_coral(projected, projected, nullptr, &coral) == ES_OK);
  es_transform* chain = nullptr;
  REQUIRE(es_transform_compose(lda, coral, &chain) == ES_OK);
  CHECK(std::string(es_transform_kind(chain)) == "compose");

  std::vector<double> ll(6);
  es_plda* plda = nullptr;
  REQUIRE(es_plda_train(projected, 5, 0, &plda, ll.data()) == ES_OK);
  for (int i = 1; i < 6; ++i) CHECK(ll[i] >= ll[i - 1] - 1e-8);
  double z[3] = {0, 0, 0}, llr = 0;
  CHECK(es_plda_llr(plda, z, z, 3, &llr) == ES_OK);
  CHECK(es_plda_llr(plda, z, z, 2, &llr) == ES_ERR_DIMENSION);

  es_scores* raw = nullptr;
  REQUIRE(es_score_trials(trials, projected, projected, plda, &raw) == ES_OK);
  CHECK(es_scores_count(raw) == 500);
  es_scores* normed = nullptr;
  REQUIRE(es_asnorm(raw, projected, projected, projected, 1, 20, plda, &normed) == ES_OK);
  CHECK(es_asnorm(raw, projected, projected, projected, 3, 20, plda, &normed) == ES_ERR_INVALID_ARGUMENT);

  const std::string spath = scratch("raw.txt"), tpath = scratch("trials.txt");
  REQUIRE(es_scores_write(raw, spath.c_str()) == ES_OK);
  REQUIRE(es_trials_write(trials, tpath.c_str()) == ES_OK);
  es_scores* labeled = nullptr;
  REQUIRE(es_scores_read(spath.c_str(), trials, &labeled) == ES_OK);
  es_calibration cal{};
  REQUIRE(es_calibration_fit(labeled, 0.01, &cal) == ES_OK);
  CHECK(cal.scale > 0);
  es_scores* calibrated = nullptr;
  REQUIRE(es_calibration_apply(labeled, &cal, &calibrated) == ES_OK);
  const es_scores* systems[] = {calibrated, calibrated};
  es_scores* fused = nullptr;
  REQUIRE(es_fuse(systems, 2, &fused) == ES_OK);

  es_metrics m{};
  REQUIRE(es_evaluate(calibrated, "cmn2", nullptr, &m) == ES_OK);
  CHECK(m.min_cost <= m.act_cost);
  const double priors[] = {0.01, 0.005};
  es_cost_params custom{1.0, 1.0, priors, 2};
  es_metrics m2{};
  REQUIRE(es_evaluate(calibrated, nullptr, &custom, &m2) == ES_OK);
  CHECK(m2.eer == m.eer);
  CHECK(m2.min_cost == m.min_cost);
  es_scores* unlabeled = nullptr;
  REQUIRE(es_scores_read(spath.c_str(), nullptr, &unlabeled) == ES_OK);
  CHECK(es_evaluate(unlabeled, "cmn2", nullptr, &m2) == ES_ERR_INVALID_ARGUMENT);
  es_scores_free(unlabeled);
  char* line = nullptr;
  REQUIRE(es_metrics_format(&m, 0, &line) == ES_OK);
  CHECK(std::string(line).find(" / ") != std::string::npos);
  es_string_free(line);

  for (auto* s : {raw, normed, labeled, calibrated, fused}) es_scores_free(s);
  es_plda_free(plda);
  es_transform_free(chain);
  es_transform_free(coral);
  es_transform_free(lda);
  es_dataset_means_free(means);
  es_embeddings_free(projected);
  es_embeddings_free(centered);
  es_trials_free(trials);
  es_embeddings_free(train);
}

TEST_CASE("encoder entry points") {
  const double maps[] = {1, 2, 3, 4};
  double v = 0;
  CHECK(es_gap_mean(maps, 1, 2, 2, &v) == ES_OK);
  CHECK(v == 2.5);
  double ms[2];
  CHECK(es_gap_mean_std(maps, 1, 2, 2, ms) == ES_OK);
  CHECK(ms[1] == doctest::Approx(std::sqrt(1.25)));
  es_gradient_report r{};
  CHECK(es_encode_check(3, 1, &r) == ES_OK);
  CHECK(r.lde_max_rel_error < 1e-4);
  double lambda = 0;
  CHECK(es_anneal_lambda(0, 1000, 0.1, 5, &lambda) == ES_OK);
  CHECK(lambda == 1000);
  const double x[] = {1, 0}, w[] = {1, 0, 0, 1};
  double loss = 0, gx[2], gw[4];
  CHECK(es_asoftmax_loss(x, 2, 0, w, 2, 1, 0.0, &loss, gx, gw) == ES_OK);
  CHECK(loss == doctest::Approx(std::log(1 + std::exp(-1.0))));
  const double frames[] = {0, 0, 1, 1}, centers[] = {0, 0}, scales[] = {1}, up[] = {1, 1};
  double enc[2], gf[4], gc[2], gs[1];
  CHECK(es_lde_forward(frames, 2, 2, centers, scales, 1, enc) == ES_OK);
  CHECK(enc[0] == doctest::Approx(0.5));
  CHECK(es_lde_backward(frames, 2, 2, centers, scales, 1, up, gf, gc, gs) == ES_OK);
}

TEST_CASE("recipes through the C API") {
  const std::string dir = scratch("recipe");
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string recipe = dir + "/r.txt";
  FILE* f = std::fopen(recipe.c_str(), "w");
  std::fputs("synth role=test dim=4 speakers=20 utts=3 seed=2\nmake-trials targets=20 nontargets=50\n"
             "cosine\nevaluate\n",
             f);
  std::fclose(f);
  std::vector<std::string> lines;
  es_set_log_callback([](const char* l, void* u) { static_cast<std::vector<std::string>*>(u)->push_back(l); }, &lines);
  char* metrics = nullptr;
  CHECK(es_run_recipe(recipe.c_str(), (dir + "/work").c_str(), 0, &metrics) == ES_OK);
  es_set_log_callback(nullptr, nullptr);
  CHECK(std::string(metrics).find(" / ") != std::string::npos);
  es_string_free(metrics);
  CHECK_FALSE(lines.empty());
}
