#ifndef NEARSTAT_H
#define NEARSTAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NsStatus {
  NS_STATUS_OK = 0,
  NS_STATUS_NULL_POINTER = 1,
  NS_STATUS_INVALID_ARGUMENT = 2,
  NS_STATUS_DIMENSION_MISMATCH = 3,
  NS_STATUS_DEGENERATE = 4,
  NS_STATUS_NUMERICAL = 5,
  NS_STATUS_INTERNAL = 6,
} NsStatus;

/**
 * Opaque handle to a built function.
 */
typedef struct NsFunction NsFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a function from an instance JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer. The
 * handle written to `out` must be released with [`ns_function_free`].
 */
enum NsStatus ns_function_from_json(const char *json, struct NsFunction **out);

/**
 * # Safety
 * `f` must come from [`ns_function_from_json`] and not be used afterwards.
 */
void ns_function_free(struct NsFunction *f);

/**
 * # Safety
 * `f` must be a live handle and `out_dim` a valid pointer.
 */
enum NsStatus ns_function_dim(const struct NsFunction *f, size_t *out_dim);

/**
 * Value and one Clarke subgradient at `x` (length `n`). `out_grad` holds
 * `n` doubles; `out_differentiable` may be null.
 *
 * # Safety
 * All non-null pointers must be valid for the stated lengths.
 */
enum NsStatus ns_function_eval(const struct NsFunction *f,
                               const double *x,
                               size_t n,
                               double *out_value,
                               double *out_grad,
                               bool *out_differentiable);

/**
 * Minimum-norm point of the convex hull of `m` points of dimension `n`
 * stored row-major in `points`. `out_point` holds `n` doubles;
 * `out_coefficients` (`m` doubles, duplicates weighted zero) and
 * `out_norm` may be null.
 *
 * # Safety
 * All non-null pointers must be valid for the stated lengths.
 */
enum NsStatus ns_min_norm_point(const double *points,
                                size_t m,
                                size_t n,
                                double *out_point,
                                double *out_coefficients,
                                double *out_norm);

/**
 * Samples `samples` points of the `delta`-ball around `x` and writes the
 * norm of the min-norm element of their subgradient hull; `out_is_witness`
 * is set when that norm is at most `eps`.
 *
 * # Safety
 * All pointers must be valid; `x` holds `n` doubles.
 */
enum NsStatus ns_certify_delta_eps(const struct NsFunction *f,
                                   const double *x,
                                   size_t n,
                                   double delta,
                                   double eps,
                                   size_t samples,
                                   uint64_t seed,
                                   double *out_value,
                                   bool *out_is_witness);

/**
 * Runs an experiment from its JSON config and returns the report as a
 * JSON string in `out_report` (release with [`ns_string_free`]). Nothing
 * is written to disk.
 *
 * # Safety
 * `config_json` must be NUL-terminated and `out_report` valid.
 */
enum NsStatus ns_run_experiment(const char *config_json, char **out_report);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ns_string_free(char *s);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ns_last_error_message(void);

const char *ns_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEARSTAT_H */
