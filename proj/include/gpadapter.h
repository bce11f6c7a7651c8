/*
 * Copyright 2026 The gpadapter authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C API of the gpadapter library: uncertainty-aware classification of
 * sparse, irregularly sampled time series through a Gaussian-process
 * adapter with fast structured-kernel-interpolation sampling.
 *
 * All functions return gpa_status; on failure gpa_last_error() carries a
 * thread-local message. Handles are opaque and freed with their *_free
 * function. Configuration crosses the boundary as JSON strings; see the
 * project README for each schema.
 */

#ifndef GPADAPTER_H
#define GPADAPTER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpa_status {
  GPA_OK = 0,
  GPA_ERROR_INVALID_ARGUMENT = 2, /* bad input, config, or file */
  GPA_ERROR_NUMERIC = 3,          /* solver or factorization breakdown */
  GPA_ERROR_INTERNAL = 4
} gpa_status;

typedef struct gpa_dataset gpa_dataset;
typedef struct gpa_model gpa_model;

const char* gpa_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* gpa_last_error(void);

void gpa_dataset_free(gpa_dataset* dataset);
void gpa_model_free(gpa_model* model);
void gpa_string_free(char* str);

/* ---- datasets (JSON-lines files; header {"T":..,"classes":..}) ---- */

gpa_status gpa_dataset_load(const char* path, gpa_dataset** out);
gpa_status gpa_dataset_save(const gpa_dataset* dataset, const char* path);

/* Synthetic GP-prior data. Config keys: num_series, classes, n_min, n_max,
 * t_max, seed, alpha, beta, gamma, class_structure ("none"|"mean"|"kernel"),
 * template_amplitude, kernel_beta_step. */
gpa_status gpa_dataset_synth(const char* config_json, gpa_dataset** out);

/* Keeps floor(fraction * n) points per series, uniformly without
 * replacement, times stay sorted. */
gpa_status gpa_dataset_subsample(const gpa_dataset* dataset, double fraction, uint64_t seed,
                                 gpa_dataset** out);

/* Builds a dataset from in-memory series; lengths[i] points per series. */
gpa_status gpa_dataset_create(const double* const* times, const double* const* values,
                              const size_t* lengths, const int* labels, size_t num_series,
                              double t_max, int num_classes, gpa_dataset** out);

/* {"size":..,"classes":..,"T":..} */
gpa_status gpa_dataset_info(const gpa_dataset* dataset, char** json_out);

/* ---- training and evaluation ---- */

/* Config keys (all optional unless noted): classifier ("logreg"|"mlp"|
 * "convnet"|"meg"), framework ("uac"|"imp"), regime ("end_to_end"|
 * "two_stage"), mode ("ski"|"exact"), d, m, k, samples, seed, lr, momentum,
 * epochs, patience, train_fraction, grad_clip, ml_epochs, ml_lr,
 * meg_features, init_alpha, init_beta, init_gamma, cg_tol, cg_max_iter.
 * history_csv_path may be NULL. */
gpa_status gpa_train(const gpa_dataset* dataset, const char* config_json, gpa_model** out,
                     const char* history_csv_path);

gpa_status gpa_model_save(const gpa_model* model, const char* path);
gpa_status gpa_model_load(const char* path, gpa_model** out);

/* Deterministic posterior-mean prediction for one series. */
gpa_status gpa_predict(const gpa_model* model, const double* times, const double* values,
                       size_t length, int* label_out);

/* {"accuracy":..,"mean_loss":..,"per_class_accuracy":[..]} */
gpa_status gpa_evaluate(const gpa_model* model, const gpa_dataset* dataset, char** metrics_json);

/* ---- experiments (CSV written to out_csv_path) ---- */

/* Sample-approximation error sweeps. Config keys: lengths, m_sweep, k_sweep,
 * k_fixed, m_fixed, t_max, seed, alpha, beta, gamma. */
gpa_status gpa_experiment_approx_error(const char* config_json, const char* out_csv_path);

/* Wall-clock comparison of exact vs Lanczos sampling and gradients.
 * Config keys: lengths, m, k, reps, exact_reps, t_max, seed, alpha, beta,
 * gamma. */
gpa_status gpa_experiment_timing(const char* config_json, const char* out_csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GPADAPTER_H */
