// src/capi.cc

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

#include "embedspace/embedspace.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <exception>
#include <mutex>
#include <new>
#include <string>
#include <vector>

#include "embedspace/calibration.h"
#include "embedspace/encoders.h"
#include "embedspace/error.h"
#include "embedspace/io.h"
#include "embedspace/metrics.h"
#include "embedspace/parallel.h"
#include "embedspace/plda.h"
#include "embedspace/recipe.h"
#include "embedspace/scoring.h"
#include "embedspace/synth.h"
#include "embedspace/transforms.h"

using namespace embedspace;

struct es_embeddings {
  EmbeddingSet set;
};
struct es_trials {
  TrialList trials;
};
struct es_scores {
  ScoreSet scores;
};
struct es_transform {
  LinearTransform t;
};
struct es_dataset_means {
  DatasetMeans means;
};
struct es_plda {
  PldaModel model;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
es_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

// Runs fn, mapping exceptions onto status codes.
template <class Fn>
es_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ES_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<es_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ES_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ES_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return ES_ERR_INTERNAL;
  }
}

template <class T>
const T& need(const T* p, const char* what) {
  require(p != nullptr, ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
  return *p;
}

template <class T>
T* need_out(T* p, const char* what) {
  require(p != nullptr, ErrorCode::kInvalidArgument, std::string(what) + " output is NULL");
  return p;
}

const char* need_str(const char* s, const char* what) {
  require(s != nullptr, ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
  return s;
}

EmbeddingFormat format_for(const char* path, const char* format) {
  return format == nullptr ? format_from_path(path) : parse_format_name(format);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Matrix row_major(const double* data, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = data[i * cols + j];
  return m;
}

void store_row_major(const Matrix& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
}

Scorer scorer_for(const es_plda* model) {
  return model == nullptr ? Scorer::cosine() : Scorer::plda(model->model);
}

const Embedding* record(const es_embeddings* set, std::size_t index) {
  if (set == nullptr || index >= set->set.size()) return nullptr;
  return &set->set[index];
}

}  // namespace

extern "C" {

const char* es_version(void) { return "1.0.0"; }

const char* es_status_name(es_status status) {
  if (status == ES_OK) return "ok";
  if (status == ES_ERR_INTERNAL) return "internal";
  if (status >= ES_ERR_INVALID_ARGUMENT && status <= ES_ERR_EXISTS)
    return error_code_name(static_cast<ErrorCode>(status));
  return "unknown";
}

const char* es_last_error(void) { return g_last_error.c_str(); }

es_status es_set_threads(int n) {
  return guarded([&] {
    require(n >= 1, ErrorCode::kInvalidArgument, "thread count must be >= 1");
    set_num_threads(n);
  });
}

int es_get_threads(void) { return num_threads(); }

void es_set_log_callback(es_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

void es_string_free(char* s) { std::free(s); }

// ---- embeddings

es_status es_embeddings_create(size_t dim, es_embeddings** out) {
  return guarded([&] {
    require(dim >= 1, ErrorCode::kDimension, "embedding dimension must be >= 1");
    *need_out(out, "embeddings") = new es_embeddings{EmbeddingSet(dim)};
  });
}

es_status es_embeddings_add(es_embeddings* set, const char* utt_id, const char* speaker_id,
                            const char* dataset_id, const double* values, size_t dim) {
  return guarded([&] {
    require(set != nullptr, ErrorCode::kInvalidArgument, "embeddings is NULL");
    require(values != nullptr, ErrorCode::kInvalidArgument, "values is NULL");
    Vector v = Eigen::Map<const Vector>(values, static_cast<Eigen::Index>(dim));
    set->set.add({need_str(utt_id, "utt_id"), speaker_id ? speaker_id : std::string(kUnknownSpeaker),
                  dataset_id ? dataset_id : "", std::move(v)});
  });
}

es_status es_embeddings_read(const char* path, const char* format, es_embeddings** out) {
  return guarded([&] {
    need_str(path, "path");
    *need_out(out, "embeddings") = new es_embeddings{read_embeddings(path, format_for(path, format))};
  });
}

es_status es_embeddings_write(const es_embeddings* set, const char* path, const char* format) {
  return guarded([&] {
    need_str(path, "path");
    write_embeddings(need(set, "embeddings").set, path, format_for(path, format));
  });
}

void es_embeddings_free(es_embeddings* set) { delete set; }
size_t es_embeddings_count(const es_embeddings* set) { return set ? set->set.size() : 0; }
size_t es_embeddings_dim(const es_embeddings* set) { return set ? set->set.dim() : 0; }

es_status es_embeddings_vector(const es_embeddings* set, size_t index, double* out, size_t dim) {
  return guarded([&] {
    const EmbeddingSet& s = need(set, "embeddings").set;
    require(index < s.size(), ErrorCode::kInvalidArgument, "embedding index out of range");
    require(dim == s.dim(), ErrorCode::kDimension, "output length does not match the dimension");
    Eigen::Map<Vector>(need_out(out, "vector"), static_cast<Eigen::Index>(dim)) = s[index].vector;
  });
}

const char* es_embeddings_utt_id(const es_embeddings* set, size_t index) {
  const Embedding* r = record(set, index);
  return r ? r->utt_id.c_str() : nullptr;
}
const char* es_embeddings_speaker_id(const es_embeddings* set, size_t index) {
  const Embedding* r = record(set, index);
  return r ? r->speaker_id.c_str() : nullptr;
}
const char* es_embeddings_dataset_id(const es_embeddings* set, size_t index) {
  const Embedding* r = record(set, index);
  return r ? r->dataset_id.c_str() : nullptr;
}

int es_embeddings_equal(const es_embeddings* a, const es_embeddings* b) {
  return a != nullptr && b != nullptr && a->set == b->set;
}

es_status es_synth(const char* config_text, es_embeddings** out) {
  return guarded([&] {
    const SynthConfig cfg = parse_synth_config(need_str(config_text, "config"));
    *need_out(out, "embeddings") = new es_embeddings{generate(cfg)};
  });
}

// ---- trials

es_status es_trials_read(const char* path, es_trials** out) {
  return guarded([&] { *need_out(out, "trials") = new es_trials{read_trials(need_str(path, "path"))}; });
}

es_status es_trials_write(const es_trials* trials, const char* path) {
  return guarded([&] { write_trials(need(trials, "trials").trials, need_str(path, "path")); });
}

void es_trials_free(es_trials* trials) { delete trials; }
size_t es_trials_count(const es_trials* trials) { return trials ? trials->trials.size() : 0; }

es_status es_make_trials(const es_embeddings* set, size_t n_target, size_t n_nontarget,
                         uint64_t seed, es_trials** out) {
  return guarded([&] {
    *need_out(out, "trials") =
        new es_trials{make_trials(need(set, "embeddings").set, n_target, n_nontarget, seed)};
  });
}

// ---- scores

es_status es_scores_read(const char* path, const es_trials* labels, es_scores** out) {
  return guarded([&] {
    need_str(path, "path");
    ScoreSet s = labels ? read_scores(path, labels->trials) : read_scores(path);
    *need_out(out, "scores") = new es_scores{std::move(s)};
  });
}

es_status es_scores_write(const es_scores* scores, const char* path) {
  return guarded([&] { write_scores(need(scores, "scores").scores, need_str(path, "path")); });
}

void es_scores_free(es_scores* scores) { delete scores; }
size_t es_scores_count(const es_scores* scores) { return scores ? scores->scores.size() : 0; }

es_status es_scores_values(const es_scores* scores, double* out, size_t n) {
  return guarded([&] {
    const ScoreSet& s = need(scores, "scores").scores;
    require(n == s.size(), ErrorCode::kDimension, "output length does not match the score count");
    std::copy(s.scores.begin(), s.scores.end(), need_out(out, "values"));
  });
}

// ---- transforms

es_status es_transform_read(const char* path, es_transform** out) {
  return guarded([&] {
    *need_out(out, "transform") = new es_transform{parse_transform(read_file(need_str(path, "path")))};
  });
}

es_status es_transform_write(const es_transform* t, const char* path) {
  return guarded([&] { write_file(need_str(path, "path"), serialize_transform(need(t, "transform").t)); });
}

void es_transform_free(es_transform* t) { delete t; }
size_t es_transform_in_dim(const es_transform* t) { return t ? t->t.in_dim() : 0; }
size_t es_transform_out_dim(const es_transform* t) { return t ? t->t.out_dim() : 0; }

const char* es_transform_kind(const es_transform* t) {
  return t ? transform_kind_name(t->t.kind).data() : nullptr;
}

es_status es_transform_matrix(const es_transform* t, double* matrix, double* offset) {
  return guarded([&] {
    const LinearTransform& lt = need(t, "transform").t;
    store_row_major(lt.matrix, need_out(matrix, "matrix"));
    Eigen::Map<Vector>(need_out(offset, "offset"), lt.offset.size()) = lt.offset;
  });
}

es_status es_fit_lda(const es_embeddings* train, size_t out_dim, es_transform** out) {
  return guarded([&] { *need_out(out, "transform") = new es_transform{fit_lda(need(train, "train").set, out_dim)}; });
}

es_status es_fit_lsda(const es_embeddings* train, size_t out_dim, size_t k_neighbors, double alpha,
                      es_transform** out) {
  return guarded([&] {
    LsdaOptions o{k_neighbors, alpha};
    *need_out(out, "transform") = new es_transform{fit_lsda(need(train, "train").set, out_dim, o)};
  });
}

es_status es_fit_coral(const es_embeddings* source, const es_embeddings* target, const double* ridge,
                       es_transform** out) {
  return guarded([&] {
    std::optional<double> r;
    if (ridge) r = *ridge;
    *need_out(out, "transform") =
        new es_transform{fit_coral(need(source, "source").set, need(target, "target").set, r)};
  });
}

es_status es_fit_whitening(const es_embeddings* indomain, double ridge, es_transform** out) {
  return guarded([&] {
    *need_out(out, "transform") = new es_transform{fit_whitening(need(indomain, "indomain").set, ridge)};
  });
}

es_status es_transform_apply(const es_transform* t, const es_embeddings* set, es_embeddings** out) {
  return guarded([&] {
    *need_out(out, "embeddings") = new es_embeddings{need(t, "transform").t.apply(need(set, "embeddings").set)};
  });
}

es_status es_transform_compose(const es_transform* first, const es_transform* second, es_transform** out) {
  return guarded([&] {
    *need_out(out, "transform") = new es_transform{compose(need(first, "first").t, need(second, "second").t)};
  });
}

es_status es_length_normalize(const es_embeddings* set, es_embeddings** out) {
  return guarded([&] {
    *need_out(out, "embeddings") = new es_embeddings{length_normalize(need(set, "embeddings").set)};
  });
}

// ---- centering

es_status es_fit_centering(const es_embeddings* const* sets, size_t n_sets, es_dataset_means** out) {
  return guarded([&] {
    require(sets != nullptr || n_sets == 0, ErrorCode::kInvalidArgument, "sets is NULL");
    std::vector<const EmbeddingSet*> ptrs;
    for (size_t i = 0; i < n_sets; ++i) ptrs.push_back(&need(sets[i], "embeddings").set);
    *need_out(out, "means") = new es_dataset_means{fit_dataset_centering(ptrs)};
  });
}

es_status es_dataset_means_read(const char* path, es_dataset_means** out) {
  return guarded([&] {
    *need_out(out, "means") = new es_dataset_means{parse_dataset_means(read_file(need_str(path, "path")))};
  });
}

es_status es_dataset_means_write(const es_dataset_means* means, const char* path) {
  return guarded([&] {
    write_file(need_str(path, "path"), serialize_dataset_means(need(means, "means").means));
  });
}

void es_dataset_means_free(es_dataset_means* means) { delete means; }

es_status es_apply_centering(const es_embeddings* set, const es_dataset_means* means, int fallback_error,
                             es_embeddings** out) {
  return guarded([&] {
    const auto fb = fallback_error ? CenteringFallback::kError : CenteringFallback::kGlobalMean;
    *need_out(out, "embeddings") =
        new es_embeddings{apply_centering(need(set, "embeddings").set, need(means, "means").means, fb)};
  });
}

// ---- PLDA

es_status es_plda_train(const es_embeddings* train, int n_iters, uint64_t init_seed, es_plda** out,
                        double* log_likelihoods) {
  return guarded([&] {
    need_out(out, "model");
    PldaTrainResult r = train_plda(need(train, "train").set, n_iters, init_seed);
    if (log_likelihoods) std::copy(r.log_likelihoods.begin(), r.log_likelihoods.end(), log_likelihoods);
    *out = new es_plda{std::move(r.model)};
  });
}

es_status es_plda_read(const char* path, es_plda** out) {
  return guarded([&] { *need_out(out, "model") = new es_plda{parse_plda(read_file(need_str(path, "path")))}; });
}

es_status es_plda_write(const es_plda* model, const char* path) {
  return guarded([&] { write_file(need_str(path, "path"), serialize_plda(need(model, "model").model)); });
}

void es_plda_free(es_plda* model) { delete model; }
size_t es_plda_dim(const es_plda* model) { return model ? model->model.dim() : 0; }

es_status es_plda_llr(const es_plda* model, const double* enroll, const double* test, size_t dim,
                      double* out) {
  return guarded([&] {
    const PldaModel& m = need(model, "model").model;
    require(dim == m.dim(), ErrorCode::kDimension, "vector length does not match the model");
    require(enroll != nullptr && test != nullptr, ErrorCode::kInvalidArgument, "enroll or test is NULL");
    const auto n = static_cast<Eigen::Index>(dim);
    *need_out(out, "llr") =
        plda_llr(m, Eigen::Map<const Vector>(enroll, n), Eigen::Map<const Vector>(test, n));
  });
}

// ---- scoring

es_status es_score_trials(const es_trials* trials, const es_embeddings* enroll, const es_embeddings* test,
                          const es_plda* model, es_scores** out) {
  return guarded([&] {
    *need_out(out, "scores") = new es_scores{score_trials(
        need(trials, "trials").trials, need(enroll, "enroll").set, need(test, "test").set, scorer_for(model))};
  });
}

es_status es_asnorm(const es_scores* raw, const es_embeddings* enroll, const es_embeddings* test,
                    const es_embeddings* cohort, int variant, size_t top_k, const es_plda* model,
                    es_scores** out) {
  return guarded([&] {
    require(variant == 1 || variant == 2, ErrorCode::kInvalidArgument, "AS-Norm variant must be 1 or 2");
    AsNormConfig cfg = AsNormConfig::defaults(variant == 1 ? AsNormVariant::kAsNorm1 : AsNormVariant::kAsNorm2);
    if (top_k != 0) cfg.top_k = top_k;
    Cohort c{need(cohort, "cohort").set, "cohort"};
    *need_out(out, "scores") = new es_scores{asnorm(need(raw, "scores").scores, need(enroll, "enroll").set,
                                                    need(test, "test").set, c, cfg, scorer_for(model))};
  });
}

// ---- calibration

namespace {
Calibration to_cpp(const es_calibration& c) { return {c.scale, c.bias, c.effective_prior}; }
es_calibration to_c(const Calibration& c) { return {c.scale, c.bias, c.effective_prior}; }
}  // namespace

es_status es_calibration_fit(const es_scores* scores, double effective_prior, es_calibration* out) {
  return guarded([&] {
    *need_out(out, "calibration") = to_c(fit_calibration(need(scores, "scores").scores, effective_prior));
  });
}

es_status es_calibration_apply(const es_scores* scores, const es_calibration* cal, es_scores** out) {
  return guarded([&] {
    *need_out(out, "scores") =
        new es_scores{apply_calibration(need(scores, "scores").scores, to_cpp(need(cal, "calibration")))};
  });
}

es_status es_calibration_read(const char* path, es_calibration* out) {
  return guarded([&] {
    *need_out(out, "calibration") = to_c(parse_calibration(read_file(need_str(path, "path"))));
  });
}

es_status es_calibration_write(const es_calibration* cal, const char* path) {
  return guarded([&] {
    write_file(need_str(path, "path"), serialize_calibration(to_cpp(need(cal, "calibration"))));
  });
}

es_status es_fuse(const es_scores* const* systems, size_t n_systems, es_scores** out) {
  return guarded([&] {
    require(systems != nullptr || n_systems == 0, ErrorCode::kInvalidArgument, "systems is NULL");
    std::vector<ScoreSet> sets;
    for (size_t i = 0; i < n_systems; ++i) sets.push_back(need(systems[i], "scores").scores);
    *need_out(out, "scores") = new es_scores{fuse(sets)};
  });
}

// ---- metrics

es_status es_evaluate(const es_scores* labeled, const char* profile, const es_cost_params* custom,
                      es_metrics* out) {
  return guarded([&] {
    CostParams cost;
    if (profile != nullptr) {
      cost = CostParams::profile(profile);
    } else {
      const es_cost_params& c = need(custom, "cost params");
      require(c.p_targets != nullptr || c.n_p_targets == 0, ErrorCode::kInvalidArgument, "p_targets is NULL");
      cost.c_miss = c.c_miss;
      cost.c_fa = c.c_fa;
      cost.p_targets.assign(c.p_targets, c.p_targets + c.n_p_targets);
    }
    const DetectionMetrics m = evaluate(need(labeled, "scores").scores, cost);
    *need_out(out, "metrics") = {m.eer, m.min_cost, m.act_cost};
  });
}

es_status es_metrics_format(const es_metrics* m, int tsv, char** out) {
  return guarded([&] {
    const es_metrics& v = need(m, "metrics");
    const DetectionMetrics d{v.eer, v.min_cost, v.act_cost};
    *need_out(out, "string") = copy_string(tsv ? format_metrics_tsv(d) : format_metrics_line(d));
  });
}

// ---- encoders

es_status es_encode_check(size_t n_seeds, uint64_t seed, es_gradient_report* out) {
  return guarded([&] {
    const GradientCheckReport r = run_gradient_check(n_seeds, seed);
    *need_out(out, "report") = {r.seeds, r.lde_max_rel_error, r.asoftmax_max_rel_error,
                                r.margin_free_max_abs_diff};
  });
}

namespace {
FeatureMaps maps_from(const double* maps, size_t c, size_t h, size_t w) {
  require(maps != nullptr, ErrorCode::kInvalidArgument, "maps is NULL");
  return FeatureMaps(c, h, w, std::vector<double>(maps, maps + c * h * w));
}
LdeParams lde_from(const double* centers, const double* scales, size_t k, size_t d) {
  require(centers != nullptr && scales != nullptr, ErrorCode::kInvalidArgument, "LDE parameters are NULL");
  return {row_major(centers, k, d), Eigen::Map<const Vector>(scales, static_cast<Eigen::Index>(k))};
}
}  // namespace

es_status es_gap_mean(const double* maps, size_t c, size_t h, size_t w, double* out) {
  return guarded([&] {
    const Vector v = gap_mean(maps_from(maps, c, h, w));
    std::copy(v.data(), v.data() + v.size(), need_out(out, "pooled"));
  });
}

es_status es_gap_mean_std(const double* maps, size_t c, size_t h, size_t w, double* out) {
  return guarded([&] {
    const Vector v = gap_mean_std(maps_from(maps, c, h, w));
    std::copy(v.data(), v.data() + v.size(), need_out(out, "pooled"));
  });
}

es_status es_lde_forward(const double* frames, size_t l, size_t d, const double* centers,
                         const double* scales, size_t k, double* out) {
  return guarded([&] {
    require(frames != nullptr, ErrorCode::kInvalidArgument, "frames is NULL");
    store_row_major(lde_forward(row_major(frames, l, d), lde_from(centers, scales, k, d)),
                    need_out(out, "encoding"));
  });
}

es_status es_lde_backward(const double* frames, size_t l, size_t d, const double* centers,
                          const double* scales, size_t k, const double* upstream, double* grad_frames,
                          double* grad_centers, double* grad_scales) {
  return guarded([&] {
    require(frames != nullptr && upstream != nullptr, ErrorCode::kInvalidArgument, "frames or upstream is NULL");
    const LdeGradients g =
        lde_backward(row_major(frames, l, d), lde_from(centers, scales, k, d), row_major(upstream, k, d));
    store_row_major(g.frames, need_out(grad_frames, "frame gradient"));
    store_row_major(g.centers, need_out(grad_centers, "center gradient"));
    std::copy(g.scales.data(), g.scales.data() + g.scales.size(), need_out(grad_scales, "scale gradient"));
  });
}

es_status es_asoftmax_loss(const double* x, size_t d, size_t label, const double* weights, size_t n_classes,
                           int margin, double lambda, double* loss, double* grad_x, double* grad_weights) {
  return guarded([&] {
    require(x != nullptr && weights != nullptr, ErrorCode::kInvalidArgument, "input or weights is NULL");
    AsoftmaxParams p{row_major(weights, n_classes, d), margin, lambda};
    const AsoftmaxResult r =
        asoftmax_loss(Eigen::Map<const Vector>(x, static_cast<Eigen::Index>(d)), label, p);
    *need_out(loss, "loss") = r.loss;
    if (grad_x) std::copy(r.grad_input.data(), r.grad_input.data() + r.grad_input.size(), grad_x);
    if (grad_weights) store_row_major(r.grad_weights, grad_weights);
  });
}

es_status es_anneal_lambda(int64_t step, double lambda_base, double gamma, double lambda_min, double* out) {
  return guarded([&] {
    *need_out(out, "lambda") = anneal_lambda(step, {lambda_base, gamma, lambda_min});
  });
}

// ---- recipes

es_status es_run_recipe(const char* recipe_path, const char* workdir, int force, char** metrics_line) {
  return guarded([&] {
    RecipeOptions opts;
    opts.force = force != 0;
    opts.log = [](const std::string& line) {
      std::lock_guard lock(g_log_mutex);
      if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
    };
    const RecipeReport r = run_recipe(std::filesystem::path(need_str(recipe_path, "recipe path")),
                                      std::filesystem::path(need_str(workdir, "workdir")), opts);
    if (metrics_line) *metrics_line = copy_string(r.metrics_line);
  });
}

}  // extern "C"
