// include/embedspace/embedspace.h

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

/* Public C interface of libembedspace. Objects are opaque handles owned by
   the caller and released with the matching *_free function. Every call
   returns an es_status; on failure es_last_error() holds a one-line message
   for the calling thread. */
#ifndef EMBEDSPACE_EMBEDSPACE_H_
#define EMBEDSPACE_EMBEDSPACE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(EMBEDSPACE_BUILDING_LIBRARY)
#define ES_API __declspec(dllexport)
#else
#define ES_API __declspec(dllimport)
#endif
#else
#define ES_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum es_status {
  ES_OK = 0,
  ES_ERR_INVALID_ARGUMENT = 1,
  ES_ERR_IO = 2,
  ES_ERR_PARSE = 3,
  ES_ERR_DIMENSION = 4,
  ES_ERR_NUMERIC = 5,
  ES_ERR_LOOKUP = 6,
  ES_ERR_ORDER = 7,
  ES_ERR_EXISTS = 8,
  ES_ERR_INTERNAL = 99
} es_status;

ES_API const char* es_version(void);
/* "ok", "invalid_argument", "io", ... */
ES_API const char* es_status_name(es_status status);
/* Message of the last failed call on this thread, "" if none. */
ES_API const char* es_last_error(void);

/* Worker count for parallel stages; results do not depend on it. */
ES_API es_status es_set_threads(int n);
ES_API int es_get_threads(void);

typedef void (*es_log_fn)(const char* line, void* user);
/* Progress lines from long operations (recipes). NULL disables. */
ES_API void es_set_log_callback(es_log_fn fn, void* user);

/* Strings returned through char** are released with es_string_free. */
ES_API void es_string_free(char* s);

typedef struct es_embeddings es_embeddings;
typedef struct es_trials es_trials;
typedef struct es_scores es_scores;
typedef struct es_transform es_transform;
typedef struct es_dataset_means es_dataset_means;
typedef struct es_plda es_plda;

/* ---- embeddings ----
   format is "binary", "tsv", or NULL to pick from the extension. */
ES_API es_status es_embeddings_create(size_t dim, es_embeddings** out);
ES_API es_status es_embeddings_add(es_embeddings* set, const char* utt_id, const char* speaker_id,
                                   const char* dataset_id, const double* values, size_t dim);
ES_API es_status es_embeddings_read(const char* path, const char* format, es_embeddings** out);
ES_API es_status es_embeddings_write(const es_embeddings* set, const char* path, const char* format);
ES_API void es_embeddings_free(es_embeddings* set);
ES_API size_t es_embeddings_count(const es_embeddings* set);
ES_API size_t es_embeddings_dim(const es_embeddings* set);
ES_API es_status es_embeddings_vector(const es_embeddings* set, size_t index, double* out, size_t dim);
/* Borrowed pointers, valid while the set lives. NULL if index is out of range. */
ES_API const char* es_embeddings_utt_id(const es_embeddings* set, size_t index);
ES_API const char* es_embeddings_speaker_id(const es_embeddings* set, size_t index);
ES_API const char* es_embeddings_dataset_id(const es_embeddings* set, size_t index);
ES_API int es_embeddings_equal(const es_embeddings* a, const es_embeddings* b);

/* Flat `key = value` synthetic-data config text. */
ES_API es_status es_synth(const char* config_text, es_embeddings** out);

/* ---- trials ---- */
ES_API es_status es_trials_read(const char* path, es_trials** out);
ES_API es_status es_trials_write(const es_trials* trials, const char* path);
ES_API void es_trials_free(es_trials* trials);
ES_API size_t es_trials_count(const es_trials* trials);
ES_API es_status es_make_trials(const es_embeddings* set, size_t n_target, size_t n_nontarget,
                                uint64_t seed, es_trials** out);

/* ---- scores ----
   labels may be NULL; otherwise trial labels are attached by pair. */
ES_API es_status es_scores_read(const char* path, const es_trials* labels, es_scores** out);
ES_API es_status es_scores_write(const es_scores* scores, const char* path);
ES_API void es_scores_free(es_scores* scores);
ES_API size_t es_scores_count(const es_scores* scores);
ES_API es_status es_scores_values(const es_scores* scores, double* out, size_t n);

/* ---- transforms ---- */
ES_API es_status es_transform_read(const char* path, es_transform** out);
ES_API es_status es_transform_write(const es_transform* t, const char* path);
ES_API void es_transform_free(es_transform* t);
ES_API size_t es_transform_in_dim(const es_transform* t);
ES_API size_t es_transform_out_dim(const es_transform* t);
/* "center", "lda", "lsda", "coral", "whiten" or "compose". */
ES_API const char* es_transform_kind(const es_transform* t);
/* Row-major out_dim x in_dim matrix, then out_dim offset. */
ES_API es_status es_transform_matrix(const es_transform* t, double* matrix, double* offset);

ES_API es_status es_fit_lda(const es_embeddings* train, size_t out_dim, es_transform** out);
ES_API es_status es_fit_lsda(const es_embeddings* train, size_t out_dim, size_t k_neighbors,
                             double alpha, es_transform** out);
/* ridge NULL selects the default relative ridge. */
ES_API es_status es_fit_coral(const es_embeddings* source, const es_embeddings* target,
                              const double* ridge, es_transform** out);
ES_API es_status es_fit_whitening(const es_embeddings* indomain, double ridge, es_transform** out);
ES_API es_status es_transform_apply(const es_transform* t, const es_embeddings* set,
                                    es_embeddings** out);
/* x -> second(first(x)) */
ES_API es_status es_transform_compose(const es_transform* first, const es_transform* second,
                                      es_transform** out);
ES_API es_status es_length_normalize(const es_embeddings* set, es_embeddings** out);

/* ---- per-dataset centering ---- */
ES_API es_status es_fit_centering(const es_embeddings* const* sets, size_t n_sets,
                                  es_dataset_means** out);
ES_API es_status es_dataset_means_read(const char* path, es_dataset_means** out);
ES_API es_status es_dataset_means_write(const es_dataset_means* means, const char* path);
ES_API void es_dataset_means_free(es_dataset_means* means);
/* fallback_error != 0 rejects datasets absent from the means. */
ES_API es_status es_apply_centering(const es_embeddings* set, const es_dataset_means* means,
                                    int fallback_error, es_embeddings** out);

/* ---- PLDA ----
   log_likelihoods may be NULL, otherwise it receives n_iters + 1 values:
   the initial model first, then one per iteration. */
ES_API es_status es_plda_train(const es_embeddings* train, int n_iters, uint64_t init_seed,
                               es_plda** out, double* log_likelihoods);
ES_API es_status es_plda_read(const char* path, es_plda** out);
ES_API es_status es_plda_write(const es_plda* model, const char* path);
ES_API void es_plda_free(es_plda* model);
ES_API size_t es_plda_dim(const es_plda* model);
ES_API es_status es_plda_llr(const es_plda* model, const double* enroll, const double* test,
                             size_t dim, double* out);

/* ---- scoring ----
   model NULL selects cosine scoring. enroll may equal test. */
ES_API es_status es_score_trials(const es_trials* trials, const es_embeddings* enroll,
                                 const es_embeddings* test, const es_plda* model, es_scores** out);
/* variant 1 or 2; top_k 0 selects the variant default. */
ES_API es_status es_asnorm(const es_scores* raw, const es_embeddings* enroll,
                           const es_embeddings* test, const es_embeddings* cohort, int variant,
                           size_t top_k, const es_plda* model, es_scores** out);

/* ---- calibration and fusion ---- */
typedef struct es_calibration {
  double scale;
  double bias;
  double effective_prior;
} es_calibration;

/* scores must carry target/nontarget labels. */
ES_API es_status es_calibration_fit(const es_scores* scores, double effective_prior,
                                    es_calibration* out);
ES_API es_status es_calibration_apply(const es_scores* scores, const es_calibration* cal,
                                      es_scores** out);
ES_API es_status es_calibration_read(const char* path, es_calibration* out);
ES_API es_status es_calibration_write(const es_calibration* cal, const char* path);
/* Sums already-calibrated systems trial by trial. */
ES_API es_status es_fuse(const es_scores* const* systems, size_t n_systems, es_scores** out);

/* ---- metrics ---- */
typedef struct es_cost_params {
  double c_miss;
  double c_fa;
  const double* p_targets;
  size_t n_p_targets;
} es_cost_params;

typedef struct es_metrics {
  double eer; /* fraction */
  double min_cost;
  double act_cost;
} es_metrics;

/* profile "cmn2" or "vast"; NULL uses custom. */
ES_API es_status es_evaluate(const es_scores* labeled, const char* profile,
                             const es_cost_params* custom, es_metrics* out);
/* `EER[%] / minC / actC` line, or a header + value TSV when tsv != 0. */
ES_API es_status es_metrics_format(const es_metrics* m, int tsv, char** out);

/* ---- encoders ---- */
typedef struct es_gradient_report {
  size_t seeds;
  double lde_max_rel_error;
  double asoftmax_max_rel_error;
  double margin_free_max_abs_diff;
} es_gradient_report;

ES_API es_status es_encode_check(size_t n_seeds, uint64_t seed, es_gradient_report* out);
/* maps: C x H x W channel-major. out: C (mean) or 2C (mean then std). */
ES_API es_status es_gap_mean(const double* maps, size_t c, size_t h, size_t w, double* out);
ES_API es_status es_gap_mean_std(const double* maps, size_t c, size_t h, size_t w, double* out);
/* frames L x D, centers K x D, row-major; out K x D. */
ES_API es_status es_lde_forward(const double* frames, size_t l, size_t d, const double* centers,
                                const double* scales, size_t k, double* out);
ES_API es_status es_lde_backward(const double* frames, size_t l, size_t d, const double* centers,
                                 const double* scales, size_t k, const double* upstream,
                                 double* grad_frames, double* grad_centers, double* grad_scales);
/* weights n_classes x d row-major. */
ES_API es_status es_asoftmax_loss(const double* x, size_t d, size_t label, const double* weights,
                                  size_t n_classes, int margin, double lambda, double* loss,
                                  double* grad_x, double* grad_weights);
ES_API es_status es_anneal_lambda(int64_t step, double lambda_base, double gamma,
                                  double lambda_min, double* out);

/* ---- recipes ----
   Runs a recipe file into workdir. metrics_line may be NULL; it receives
   "" when the recipe has no evaluate stage. */
ES_API es_status es_run_recipe(const char* recipe_path, const char* workdir, int force,
                               char** metrics_line);

#ifdef __cplusplus
}
#endif

#endif /* EMBEDSPACE_EMBEDSPACE_H_ */
