/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef BAYESLOGIT_H
#define BAYESLOGIT_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/*
 Result code of every fallible call.
 */
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  BL_STATUS_INVALID_ARGUMENT = 2,
  BL_STATUS_DIMENSION_MISMATCH = 3,
  BL_STATUS_SINGULAR_COVARIANCE = 4,
  BL_STATUS_EMPTY_CLASS = 5,
  BL_STATUS_INSUFFICIENT_DATA = 6,
  BL_STATUS_DEGENERATE = 7,
  BL_STATUS_UNDEFINED_POSTERIOR = 8,
  BL_STATUS_INVALID_OVERLAP = 9,
  BL_STATUS_NON_FINITE = 10,
  BL_STATUS_PARSE = 11,
  BL_STATUS_IO = 12,
  BL_STATUS_PANIC = 13,
} BlStatus;

typedef enum BlVarianceEstimator {
  BL_VARIANCE_ESTIMATOR_POPULATION = 0,
  BL_VARIANCE_ESTIMATOR_SAMPLE = 1,
} BlVarianceEstimator;

typedef enum BlFeatureKind {
  BL_FEATURE_KIND_LINEAR = 0,
  BL_FEATURE_KIND_QUADRATIC = 1,
} BlFeatureKind;

typedef enum BlCompareMode {
  BL_COMPARE_MODE_ESTIMATED = 0,
  BL_COMPARE_MODE_EXACT = 1,
} BlCompareMode;

/*
 Opaque labelled dataset.
 */
typedef struct BlDataset BlDataset;

/*
 Opaque generative (Bayes) model.
 */
typedef struct BlGenerativeModel BlGenerativeModel;

/*
 Opaque logistic regression model.
 */
typedef struct BlLogitModel BlLogitModel;

typedef struct BlTrainConfig {
  double learning_rate;
  uintptr_t max_iters;
  double grad_tol;
  uint64_t seed;
  bool backtracking;
  double step_growth;
  double l2;
} BlTrainConfig;

typedef struct BlTrainReport {
  uintptr_t iterations;
  double final_grad_norm;
  double final_ll;
  bool converged;
  double max_abs_weight;
} BlTrainReport;

typedef struct BlCompareSummary {
  double max_abs_prob_diff;
  double max_coefficient_error;
  uintptr_t iterations;
  bool converged;
  /*
   Uniform scenarios only: every piecewise branch matched.
   */
  bool branches_pass;
} BlCompareSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread; empty after a success.
 The pointer stays valid until the next call into the library on this thread.
 */
const char *bl_last_error_message(void);

/*
 # Safety
 `s` must come from this library and not have been freed.
 */
void bl_string_free(char *s);

/*
 Builds a dataset from `n * dim` row-major features and `n` labels in `1..=num_classes`.

 # Safety
 `features` must point to `n * dim` doubles, `labels` to `n` values and `out` to writable storage.
 */
enum BlStatus bl_dataset_new(const double *features,
                             const uint32_t *labels,
                             uintptr_t n,
                             uintptr_t dim,
                             uintptr_t num_classes,
                             struct BlDataset **out);

/*
 Reads a `y,x1,...,xd` CSV file.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum BlStatus bl_dataset_read_csv(const char *path, struct BlDataset **out);

/*
 # Safety
 `ds` must be a live handle or null.
 */
uintptr_t bl_dataset_len(const struct BlDataset *ds);

/*
 # Safety
 `ds` must be a live handle or null.
 */
uintptr_t bl_dataset_dim(const struct BlDataset *ds);

/*
 # Safety
 `ds` must be a live handle or null.
 */
uintptr_t bl_dataset_num_classes(const struct BlDataset *ds);

/*
 # Safety
 `ds` must come from this library and not have been freed; null is ignored.
 */
void bl_dataset_free(struct BlDataset *ds);

/*
 Method-of-moments Gaussian fit (univariate when `dim == 1`).

 # Safety
 `ds` must be a live handle and `out` writable.
 */
enum BlStatus bl_generative_fit_gaussian(const struct BlDataset *ds,
                                         enum BlVarianceEstimator estimator,
                                         struct BlGenerativeModel **out);

/*
 Min/max uniform-support fit of a 1-d dataset.

 # Safety
 `ds` must be a live handle and `out` writable.
 */
enum BlStatus bl_generative_fit_uniform(const struct BlDataset *ds, struct BlGenerativeModel **out);

/*
 # Safety
 `model` must be a live handle or null.
 */
uintptr_t bl_generative_num_classes(const struct BlGenerativeModel *model);

/*
 # Safety
 `model` must be a live handle or null.
 */
uintptr_t bl_generative_dim(const struct BlGenerativeModel *model);

/*
 Writes `P(y = s | x)` for every class into `probs` (length `num_classes`).
 Returns `BL_STATUS_UNDEFINED_POSTERIOR` where every class density vanishes.

 # Safety
 `x` must hold `dim` doubles and `probs` room for `num_classes` doubles.
 */
enum BlStatus bl_generative_posterior(const struct BlGenerativeModel *model,
                                      const double *x,
                                      uintptr_t dim,
                                      double *probs,
                                      uintptr_t num_classes);

/*
 Posterior of 0-based class `class` through the log-odds form. Gaussian models only.

 # Safety
 `x` must hold `dim` doubles and `out` be writable.
 */
enum BlStatus bl_generative_posterior_logistic_form(const struct BlGenerativeModel *model,
                                                    uintptr_t class_,
                                                    const double *x,
                                                    uintptr_t dim,
                                                    double *out);

/*
 Closed-form discriminant `z_{m,s}` (0-based classes) of a Gaussian model.
 `beta` receives `dim` values and `gamma` `dim * dim` values, row-major.

 # Safety
 Output pointers must have the stated lengths.
 */
enum BlStatus bl_generative_discriminant(const struct BlGenerativeModel *model,
                                         uintptr_t m,
                                         uintptr_t s,
                                         double *alpha,
                                         double *beta,
                                         uintptr_t beta_len,
                                         double *gamma,
                                         uintptr_t gamma_len);

/*
 Model-file text for a generative model; free with `bl_string_free`.

 # Safety
 `model` must be a live handle or null.
 */
char *bl_generative_to_text(const struct BlGenerativeModel *model);

/*
 # Safety
 `text` must be NUL-terminated and `out` writable.
 */
enum BlStatus bl_generative_from_text(const char *text, struct BlGenerativeModel **out);

/*
 # Safety
 `model` must come from this library and not have been freed; null is ignored.
 */
void bl_generative_free(struct BlGenerativeModel *model);

struct BlTrainConfig bl_train_config_default(void);

/*
 Gradient-ascent fit. `config` may be null for defaults; `report` may be null.

 # Safety
 `ds` must be a live handle, `out` writable, `config`/`report` valid or null.
 */
enum BlStatus bl_logit_train(const struct BlDataset *ds,
                             enum BlFeatureKind features,
                             const struct BlTrainConfig *config,
                             struct BlLogitModel **out,
                             struct BlTrainReport *report);

/*
 # Safety
 `model` must be a live handle or null.
 */
uintptr_t bl_logit_num_classes(const struct BlLogitModel *model);

/*
 Number of weights per non-reference class (intercept included).

 # Safety
 `model` must be a live handle or null.
 */
uintptr_t bl_logit_weight_len(const struct BlLogitModel *model);

/*
 Copies the weights of 0-based non-reference class `class`.

 # Safety
 `out` must have room for `len` doubles.
 */
enum BlStatus bl_logit_weights(const struct BlLogitModel *model,
                               uintptr_t class_,
                               double *out,
                               uintptr_t len);

/*
 # Safety
 `x` must hold `dim` doubles and `probs` room for `num_classes` doubles.
 */
enum BlStatus bl_logit_predict_proba(const struct BlLogitModel *model,
                                     const double *x,
                                     uintptr_t dim,
                                     double *probs,
                                     uintptr_t num_classes);

/*
 # Safety
 `model` must be a live handle or null.
 */
char *bl_logit_to_text(const struct BlLogitModel *model);

/*
 # Safety
 `text` must be NUL-terminated and `out` writable.
 */
enum BlStatus bl_logit_from_text(const char *text, struct BlLogitModel **out);

/*
 # Safety
 `model` must come from this library and not have been freed; null is ignored.
 */
void bl_logit_free(struct BlLogitModel *model);

/*
 Runs the comparison experiment on a TOML scenario with default training
 settings. `report_text` may be null; otherwise it receives the full text
 report, to be released with `bl_string_free`.

 # Safety
 `spec_toml` must be NUL-terminated; `summary` writable; `report_text` writable or null.
 */
enum BlStatus bl_compare(const char *spec_toml,
                         enum BlCompareMode mode,
                         uintptr_t eval_points,
                         struct BlCompareSummary *summary,
                         char **report_text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAYESLOGIT_H */
