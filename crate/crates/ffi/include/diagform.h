#ifndef DIAGFORM_H
#define DIAGFORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_NULL_POINTER = 1,
  DF_STATUS_INVALID_ARGUMENT = 2,
  DF_STATUS_RANGE = 3,
  DF_STATUS_RESOURCE = 4,
  DF_STATUS_GENERATION = 5,
  DF_STATUS_UNSUPPORTED = 6,
  DF_STATUS_PRECISION = 7,
  DF_STATUS_OVERFLOW = 8,
  DF_STATUS_PANIC = 9,
} DfStatus;

/**
 * A diagonal form `a_1 x_1^d + ... + a_k x_k^d`.
 */
typedef struct DfForm DfForm;

/**
 * The sorted normalized values of a form.
 */
typedef struct DfSequence DfSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *df_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *df_last_error_message(void);

/**
 * Creates a form from `k` positive coefficients.
 *
 * # Safety
 * `alpha` must point to `k` doubles and `out` must be writable.
 */
enum DfStatus df_form_new(uint32_t degree, const double *alpha, size_t k, struct DfForm **out);

/**
 * Releases a form. Null is ignored.
 *
 * # Safety
 * `form` must come from [`df_form_new`] and not be freed twice.
 */
void df_form_free(struct DfForm *form);

/**
 * `c(d, k, alpha)`, the constant giving unit mean spacing.
 *
 * # Safety
 * `form` must be a live handle and `out` writable.
 */
enum DfStatus df_form_normalization_constant(const struct DfForm *form, double *out);

/**
 * `c * q(x)^{k/d}` for a point of `k` positive integers.
 *
 * # Safety
 * `form` must be a live handle, `x` must point to `k` values, `out` writable.
 */
enum DfStatus df_form_normalized_value(const struct DfForm *form,
                                       const uint64_t *x,
                                       size_t k,
                                       double *out);

/**
 * Number of `x in Z_{>0}^k` with `q(x) <= r`.
 *
 * # Safety
 * `form` must be a live handle and `out` writable.
 */
enum DfStatus df_count_below(const struct DfForm *form, double r, uint64_t *out);

/**
 * The `m` smallest normalized values of the form.
 *
 * # Safety
 * `form` must be a live handle and `out` writable.
 */
enum DfStatus df_sequence_generate(const struct DfForm *form,
                                   size_t m,
                                   double safety,
                                   struct DfSequence **out);

/**
 * Number of values; 0 for null.
 *
 * # Safety
 * `seq` must be null or a live handle.
 */
size_t df_sequence_len(const struct DfSequence *seq);

/**
 * Borrows the values. The pointer stays valid until the sequence is freed.
 *
 * # Safety
 * `seq` must be a live handle; `values` and `len` writable.
 */
enum DfStatus df_sequence_values(const struct DfSequence *seq, const double **values, size_t *len);

/**
 * Releases a sequence. Null is ignored.
 *
 * # Safety
 * `seq` must come from [`df_sequence_generate`] and not be freed twice.
 */
void df_sequence_free(struct DfSequence *seq);

/**
 * Sharp `order`-correlation of the first `m` of `n` sorted values with the
 * window `[lo_j, hi_j)`, `j = 1..order-1`.
 *
 * # Safety
 * `values` must point to `n` doubles, `lo`/`hi` to `order - 1` doubles each,
 * and the out pointers must be writable.
 */
enum DfStatus df_ell_correlation(const double *values,
                                 size_t n,
                                 size_t m,
                                 size_t order,
                                 const double *lo,
                                 const double *hi,
                                 uint64_t *raw_count,
                                 double *statistic);

/**
 * Number of gaps `>= threshold` between consecutive sorted values.
 *
 * # Safety
 * `values` must point to `n` doubles and `count` be writable.
 */
enum DfStatus df_long_gaps(const double *values, size_t n, double threshold, size_t *count);

/**
 * Kolmogorov-Smirnov distance of the unit-mean gaps of sorted values from
 * `1 - e^{-s}`.
 *
 * # Safety
 * `values` must point to `n` doubles and `out` be writable.
 */
enum DfStatus df_ks_exponential(const double *values, size_t n, double *out);

/**
 * Solutions of `sum a_j x_j^d = 0` with `|x_j| <= m`; with `primitive`
 * only those with coordinate gcd one. `nonzero` counts solutions with all
 * coordinates nonzero.
 *
 * # Safety
 * `a` must point to `k` values; `total` and `nonzero` writable.
 */
enum DfStatus df_count_equation(const int64_t *a,
                                size_t k,
                                uint32_t d,
                                uint64_t m,
                                bool primitive,
                                uint64_t *total,
                                uint64_t *nonzero);

/**
 * Points of `[m, 2m]^k` with `|sum a_j x_j^d| <= h`.
 *
 * # Safety
 * `a` must point to `k` values and `out` be writable.
 */
enum DfStatus df_count_inequality(const int64_t *a,
                                  size_t k,
                                  uint32_t d,
                                  uint64_t m,
                                  double h,
                                  uint64_t *out);

/**
 * Exact rank of a row-major integer matrix.
 *
 * # Safety
 * `entries` must point to `rows * cols` values and `out` be writable.
 */
enum DfStatus df_exact_rank(const int64_t *entries, size_t rows, size_t cols, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIAGFORM_H */
