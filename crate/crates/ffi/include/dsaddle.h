#ifndef DSADDLE_H
#define DSADDLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsaddleStatus {
  DSADDLE_STATUS_OK = 0,
  DSADDLE_STATUS_NULL_POINTER = 1,
  DSADDLE_STATUS_INVALID_ARGUMENT = 2,
  DSADDLE_STATUS_DIMENSION_MISMATCH = 3,
  DSADDLE_STATUS_SINGULAR_MATRIX = 4,
  DSADDLE_STATUS_NOT_POSITIVE_DEFINITE = 5,
  DSADDLE_STATUS_BREAKDOWN = 6,
  DSADDLE_STATUS_NO_CONVERGENCE = 7,
  DSADDLE_STATUS_IO = 8,
  DSADDLE_STATUS_INTERNAL = 9,
} DsaddleStatus;

typedef struct DsaddlePreconditioner DsaddlePreconditioner;

/**
 * A double saddle-point system with its right-hand side.
 */
typedef struct DsaddleSystem DsaddleSystem;

/**
 * Solver outcome written by [`dsaddle_solve_gmres`].
 */
typedef struct DsaddleSolveReport {
  size_t iterations;
  size_t restarts;
  /**
   * 0 converged, 1 iteration limit, 2 stagnated.
   */
  int32_t status;
  double relative_residual;
  double wall_seconds;
} DsaddleSolveReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Manufactured Stokes-Darcy problem on an `n1 x n1` grid per subdomain.
 * `alpha <= 0` sets the slip coefficient to `nu`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DsaddleStatus dsaddle_stokes_darcy_new(size_t n1,
                                            double kappa,
                                            double nu,
                                            double alpha,
                                            struct DsaddleSystem **out);

/**
 * Seeded random instance; `d_nonzero` selects the nonzero-`D` case.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DsaddleStatus dsaddle_random_instance(size_t n,
                                           size_t m,
                                           size_t p,
                                           bool d_nonzero,
                                           uint64_t seed,
                                           struct DsaddleSystem **out);

/**
 * Loads a directory written by `dsaddle export-mtx`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum DsaddleStatus dsaddle_system_load_mtx(const char *path, struct DsaddleSystem **out);

/**
 * # Safety
 * `sys` must come from a `dsaddle_*` constructor and not be used afterwards.
 */
void dsaddle_system_free(struct DsaddleSystem *sys);

/**
 * Block sizes `n`, `m`, `p`; any output pointer may be null.
 *
 * # Safety
 * `sys` must be a live handle; non-null outputs must be valid for writes.
 */
enum DsaddleStatus dsaddle_system_dims(const struct DsaddleSystem *sys,
                                       size_t *n,
                                       size_t *m,
                                       size_t *p);

/**
 * Copies the right-hand side (length `n + m + p`) into `out`.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum DsaddleStatus dsaddle_system_rhs(const struct DsaddleSystem *sys, double *out, size_t len);

/**
 * Builds a block preconditioner from a JSON description, e.g.
 * `{"family": "md"}`. A null `spec_json` selects the default for the
 * system: the practical variant for Stokes-Darcy, exact blocks otherwise.
 *
 * # Safety
 * `sys` must be a live handle, `spec_json` null or NUL-terminated, and
 * `out` valid for writes.
 */
enum DsaddleStatus dsaddle_preconditioner_new(const struct DsaddleSystem *sys,
                                              const char *spec_json,
                                              struct DsaddlePreconditioner **out);

/**
 * `y = M^-1 x`, both of length `n + m + p`.
 *
 * # Safety
 * `x` and `y` must be valid for `len` reads and writes and not overlap.
 */
enum DsaddleStatus dsaddle_preconditioner_apply(const struct DsaddlePreconditioner *prec,
                                                const double *x,
                                                double *y,
                                                size_t len);

/**
 * # Safety
 * `prec` must come from [`dsaddle_preconditioner_new`] and not be used afterwards.
 */
void dsaddle_preconditioner_free(struct DsaddlePreconditioner *prec);

/**
 * Left-preconditioned restarted GMRES from a zero guess. A null `rhs`
 * uses the system's own right-hand side. Non-convergence is reported in
 * `report` with status `DSADDLE_STATUS_OK`.
 *
 * # Safety
 * `rhs` (if non-null) and `x` must be valid for `len` values; `report`
 * may be null.
 */
enum DsaddleStatus dsaddle_solve_gmres(const struct DsaddleSystem *sys,
                                       const struct DsaddlePreconditioner *prec,
                                       const double *rhs,
                                       double *x,
                                       size_t len,
                                       size_t restart,
                                       double tol,
                                       size_t maxit,
                                       struct DsaddleSolveReport *report);

/**
 * The six eigenvalues `2 cos((2i+1) pi / (2j+3))`, ascending.
 *
 * # Safety
 * `out` must be valid for 6 writes.
 */
enum DsaddleStatus dsaddle_six_eigenvalues(double *out);

/**
 * Roots of `l^3 - l^2 - (1 + mu) l + mu`, by descending real part, as
 * interleaved `(re, im)` pairs.
 *
 * # Safety
 * `out` must be valid for 6 writes.
 */
enum DsaddleStatus dsaddle_cubic_roots(double mu, double *out);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *dsaddle_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSADDLE_H */
