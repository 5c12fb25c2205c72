#ifndef FINSLERKIT_H
#define FINSLERKIT_H

#include <stddef.h>
#include <stdint.h>

#define FK_OK 0

#define FK_NULL_POINTER 1

#define FK_INVALID_CONFIG 2

#define FK_OUTSIDE_DOMAIN 3

#define FK_NUMERICAL 4

#define FK_DIMENSION_MISMATCH 5

#define FK_PANIC 6

// Opaque metric handle.
typedef struct FkMetric FkMetric;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a metric from a NUL-terminated JSON config document
// (`{"metric": ..., "run": ...}`) and stores a new handle in `*out`.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a writable pointer.
int fk_metric_from_json(const char *json, struct FkMetric **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `metric` must be null or a handle not yet freed.
void fk_metric_free(struct FkMetric *metric);

// Manifold dimension, or 0 for a null handle.
//
// # Safety
// `metric` must be null or a live handle.
size_t fk_metric_dimension(const struct FkMetric *metric);

// `F(base, vec)` into `*out`.
//
// # Safety
// `base` and `vec` must point to `n` doubles, `out` to one writable double.
int fk_metric_eval(const struct FkMetric *metric,
                   const double *base,
                   const double *vec,
                   size_t n,
                   double *out);

// Fundamental tensor at `(base, vec)`, written row-major into `out[n*n]`.
//
// # Safety
// `base` and `vec` must point to `n` doubles, `out` to `n*n` writable doubles.
int fk_metric_tensor(const struct FkMetric *metric,
                     const double *base,
                     const double *vec,
                     size_t n,
                     double *out);

// Sign type of the fundamental tensor: `*classification` is 0 positive definite,
// 1 positive semi-definite degenerate, 2 indefinite, 3 negative
// semi-definite, 4 negative definite. Eigenvalues within
// `tolerance * ||g||` of zero count as zero.
//
// # Safety
// `base` and `vec` must point to `n` doubles; `classification` and `min_eigenvalue`
// must be writable.
int fk_metric_classify(const struct FkMetric *metric,
                       const double *base,
                       const double *vec,
                       size_t n,
                       double tolerance,
                       int32_t *classification,
                       double *min_eigenvalue);

// Message of the last failed call on this thread (empty after a success).
// Valid until the next `fk_` call on the same thread.
const char *fk_last_error_message(void);

// Library version, a static string.
const char *fk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FINSLERKIT_H */
