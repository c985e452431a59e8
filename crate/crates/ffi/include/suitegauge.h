#ifndef SUITEGAUGE_H
#define SUITEGAUGE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_ARGUMENT = 2,
  SG_STATUS_PARSE = 3,
  SG_STATUS_SCHEMA = 4,
  SG_STATUS_INTEGRITY = 5,
  SG_STATUS_DOMAIN = 6,
  SG_STATUS_SHAPE = 7,
  SG_STATUS_INSUFFICIENT_DATA = 8,
  SG_STATUS_IO = 9,
  SG_STATUS_CONFIG = 10,
  SG_STATUS_PANIC = 11,
} SgStatus;

typedef struct SgDataset SgDataset;

typedef struct SgForest SgForest;

typedef struct SgPValueMatrix SgPValueMatrix;

/**
 * Outcome of a two-sample energy test.
 */
typedef struct {
  double statistic;
  double p_value;
  size_t permutations;
  uint64_t seed;
  bool significant;
} SgEnergyResult;

/**
 * Outcome of a two-sample Kolmogorov-Smirnov test.
 */
typedef struct {
  double statistic_d;
  double p_value;
  size_t n;
  size_t m;
  bool significant;
} SgKsResult;

/**
 * Forest hyperparameters. `max_depth == 0` means unlimited.
 */
typedef struct {
  size_t n_trees;
  double max_features;
  size_t min_samples_leaf;
  size_t min_samples_split;
  size_t max_depth;
  bool bootstrap;
  uint64_t seed;
} SgForestConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *sg_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sg_string_free(char *s);

/**
 * Loads a feature CSV and, if `performance_path` is non-null, a
 * performance CSV.
 *
 * # Safety
 * Paths must be null-terminated strings; `out` must be writable.
 */
SgStatus sg_dataset_load(const char *features_path, const char *performance_path, SgDataset **out);

/**
 * Drops instances with missing features in place. `dropped` (nullable)
 * receives the number removed.
 *
 * # Safety
 * `ds` must be a live handle.
 */
SgStatus sg_dataset_validate(SgDataset *ds, size_t *dropped);

/**
 * Number of suites, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t sg_dataset_suite_count(const SgDataset *ds);

/**
 * Suite id at `index` (in order of first appearance) and its instance count.
 *
 * # Safety
 * `ds` must be a live handle; `id_out` must be writable; `k_out` may be null.
 */
SgStatus sg_dataset_suite(const SgDataset *ds, size_t index, char **id_out, size_t *k_out);

/**
 * # Safety
 * `ds` must be null or a live handle; it is invalid afterwards.
 */
void sg_dataset_free(SgDataset *ds);

/**
 * Energy-test p-values for every ordered pair of suites. `row_fitted_scaling`
 * selects per-row standardization; otherwise raw features are compared.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
SgStatus sg_compare_features(const SgDataset *ds,
                             size_t permutations,
                             uint64_t seed,
                             double alpha,
                             bool row_fitted_scaling,
                             SgPValueMatrix **out);

/**
 * Number of suites on each side of the matrix, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sg_pvalue_matrix_size(const SgPValueMatrix *m);

/**
 * # Safety
 * `m` must be a live handle; `id_out` must be writable.
 */
SgStatus sg_pvalue_matrix_suite_id(const SgPValueMatrix *m, size_t index, char **id_out);

/**
 * Result for the cell at (`row`, `col`); rows carry the fitted scaler.
 * Diagonal cells are not computed and report `SG_STATUS_INVALID_ARGUMENT`.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
SgStatus sg_pvalue_matrix_cell(const SgPValueMatrix *m,
                               size_t row,
                               size_t col,
                               SgEnergyResult *out);

/**
 * # Safety
 * `m` must be null or a live handle; it is invalid afterwards.
 */
void sg_pvalue_matrix_free(SgPValueMatrix *m);

/**
 * Energy statistic between a `k1 x n` and a `k2 x n` sample.
 *
 * # Safety
 * `p` and `q` must point to `k1 * n` and `k2 * n` doubles; `out` writable.
 */
SgStatus sg_energy_statistic(const double *p,
                             size_t k1,
                             const double *q,
                             size_t k2,
                             size_t n,
                             double *out);

/**
 * Energy statistic with a seeded permutation p-value.
 *
 * # Safety
 * As for [`sg_energy_statistic`].
 */
SgStatus sg_energy_test(const double *p,
                        size_t k1,
                        const double *q,
                        size_t k2,
                        size_t n,
                        size_t permutations,
                        uint64_t seed,
                        double alpha,
                        SgEnergyResult *out);

/**
 * Two-sample Kolmogorov-Smirnov test.
 *
 * # Safety
 * `x` and `y` must point to `n` and `m` doubles; `out` writable.
 */
SgStatus sg_ks_test(const double *x,
                    size_t n,
                    const double *y,
                    size_t m,
                    double alpha,
                    SgKsResult *out);

/**
 * One seeded maximal independent set of the cosine-similarity graph over
 * the `k` rows of `features`. `mask_out[i]` is set to 1 for selected rows
 * and 0 otherwise; `count_out` (nullable) receives the set size.
 *
 * # Safety
 * `features` must point to `k * n` doubles and `mask_out` to `k` bytes.
 */
SgStatus sg_select_instances(const double *features,
                             size_t k,
                             size_t n,
                             double threshold,
                             uint64_t seed,
                             uint8_t *mask_out,
                             size_t *count_out);

/**
 * Library defaults for forest hyperparameters.
 */
SgForestConfig sg_forest_config_default(void);

/**
 * Fits a regression forest on a `k x n` design matrix. A null `config`
 * uses the defaults.
 *
 * # Safety
 * `x` must point to `k * n` doubles, `y` to `k`; `out` writable.
 */
SgStatus sg_forest_fit(const double *x,
                       size_t k,
                       size_t n,
                       const double *y,
                       const SgForestConfig *config,
                       SgForest **out);

/**
 * Predicts `k` rows of an `k x n` matrix into `out`.
 *
 * # Safety
 * `forest` must be a live handle; `x` must point to `k * n` doubles and
 * `out` to `k` writable doubles.
 */
SgStatus sg_forest_predict(const SgForest *forest,
                           const double *x,
                           size_t k,
                           size_t n,
                           double *out);

/**
 * Serializes a model as versioned JSON.
 *
 * # Safety
 * `forest` must be a live handle; `json_out` writable.
 */
SgStatus sg_forest_to_json(const SgForest *forest, char **json_out);

/**
 * # Safety
 * `json` must be a null-terminated string; `out` writable.
 */
SgStatus sg_forest_from_json(const char *json, SgForest **out);

/**
 * # Safety
 * `forest` must be null or a live handle; it is invalid afterwards.
 */
void sg_forest_free(SgForest *forest);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUITEGAUGE_H */
