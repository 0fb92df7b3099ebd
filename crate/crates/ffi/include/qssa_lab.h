#ifndef QSSA_LAB_H
#define QSSA_LAB_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define QL_EQ_ATTRACTING_NODE 0

#define QL_EQ_ATTRACTING_ORIGIN 1

#define QL_EQ_SADDLE 2

#define QL_EQ_AT_INFINITY 3

#define QL_EQ_NONE 4

#define QL_EQ_DEGENERATE 5

#define QL_VERDICT_USE_DELTA_M 0

#define QL_VERDICT_USE_DELTA_0 1

#define QL_VERDICT_INFLOW_EXCEEDS_CAPACITY 2

/**
 * Result code of every fallible call.
 */
typedef enum QlStatus {
  QL_STATUS_OK = 0,
  QL_STATUS_NULL_POINTER = 1,
  QL_STATUS_INVALID_PARAMETER = 2,
  QL_STATUS_INVALID_INPUT = 3,
  QL_STATUS_PARSE = 4,
  /**
   * Integration, iteration or root finding failed.
   */
  QL_STATUS_NUMERICAL = 5,
  /**
   * Parameters outside the regime the call needs.
   */
  QL_STATUS_DEGENERATE = 6,
  QL_STATUS_OUT_OF_RANGE = 7,
  QL_STATUS_PANIC = 8,
} QlStatus;

/**
 * Slow manifold `c = C(s)` on a grid.
 */
typedef struct QlManifold QlManifold;

/**
 * Rate parameters `(k0, eT, k1, km1, k2)`.
 */
typedef struct QlParams QlParams;

/**
 * Sampled solution `(t, s, c)` of the planar model.
 */
typedef struct QlTrajectory QlTrajectory;

/**
 * Finite stationary point. `kind` is one of the `QL_EQ_*` values; `s` and
 * `c` are NaN when there is no point.
 */
typedef struct QlEquilibrium {
  double s;
  double c;
  int32_t kind;
} QlEquilibrium;

/**
 * Small parameters and validity diagnostics. `delta_m` is NaN when
 * `k0 >= k2 eT`; `verdict` is one of the `QL_VERDICT_*` values.
 */
typedef struct QlDiagnostics {
  double eps_c;
  double tau0;
  double eps_star;
  double eps_o;
  double alpha;
  double delta0;
  double delta_m;
  int32_t verdict;
} QlDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and return the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ql_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ql_version(void);

/**
 * Validate and store rate parameters.
 *
 * # Safety
 * `out` must be a valid pointer to a `QlParams *`.
 */
enum QlStatus ql_params_new(double k0,
                            double e_t,
                            double k1,
                            double km1,
                            double k2,
                            struct QlParams **out);

/**
 * Parse parameters from the flat JSON object `{"k0", "eT", "k1", "km1", "k2"}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QlStatus ql_params_from_json(const char *json, struct QlParams **out);

/**
 * # Safety
 * `p` must be null or a handle from `ql_params_new`/`ql_params_from_json`
 * that has not been freed.
 */
void ql_params_free(struct QlParams *p);

/**
 * # Safety
 * `p` must be a live parameter handle and `out` a valid pointer.
 */
enum QlStatus ql_equilibrium(const struct QlParams *p, struct QlEquilibrium *out);

/**
 * # Safety
 * `p` must be a live parameter handle and `out` a valid pointer.
 */
enum QlStatus ql_diagnostics(const struct QlParams *p, struct QlDiagnostics *out);

/**
 * Integrate from `(s0, c0)` over `[0, t_end]` with the given tolerances.
 * An incomplete run (step budget or step-size underflow) is an error.
 *
 * # Safety
 * `p` must be a live parameter handle and `out` a valid pointer.
 */
enum QlStatus ql_simulate(const struct QlParams *p,
                          double s0,
                          double c0,
                          double t_end,
                          double rel_tol,
                          double abs_tol,
                          struct QlTrajectory **out);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `tr` must be null or a live trajectory handle.
 */
size_t ql_trajectory_len(const struct QlTrajectory *tr);

/**
 * Sample `i` as `(t, s, c)`.
 *
 * # Safety
 * `tr` must be a live trajectory handle; `t`, `s`, `c` valid pointers.
 */
enum QlStatus ql_trajectory_get(const struct QlTrajectory *tr,
                                size_t i,
                                double *t,
                                double *s,
                                double *c);

/**
 * # Safety
 * `tr` must be null or a live trajectory handle.
 */
void ql_trajectory_free(struct QlTrajectory *tr);

/**
 * Slow manifold on `n_points` equally spaced points of `[0, s_max]`.
 *
 * # Safety
 * `p` must be a live parameter handle and `out` a valid pointer.
 */
enum QlStatus ql_slow_manifold(const struct QlParams *p,
                               double s_max,
                               size_t n_points,
                               double tol,
                               size_t max_iter,
                               struct QlManifold **out);

/**
 * Number of grid points. Can be smaller than requested when the curve
 * ends at a fold below the s-axis. 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live manifold handle.
 */
size_t ql_manifold_len(const struct QlManifold *m);

/**
 * Whether the iteration met its tolerance; false for a null handle.
 *
 * # Safety
 * `m` must be null or a live manifold handle.
 */
bool ql_manifold_converged(const struct QlManifold *m);

/**
 * Point `i` as `(s, c, dc/ds)`.
 *
 * # Safety
 * `m` must be a live manifold handle; `s`, `c`, `slope` valid pointers.
 */
enum QlStatus ql_manifold_get(const struct QlManifold *m,
                              size_t i,
                              double *s,
                              double *c,
                              double *slope);

/**
 * # Safety
 * `m` must be null or a live manifold handle.
 */
void ql_manifold_free(struct QlManifold *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSSA_LAB_H */
