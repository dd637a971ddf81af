#ifndef PIMVC_H
#define PIMVC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PimStatus {
  PIM_STATUS_OK = 0,
  PIM_STATUS_NULL_POINTER = 1,
  PIM_STATUS_INVALID_ARGUMENT = 2,
  PIM_STATUS_IO = 3,
  PIM_STATUS_FORMAT = 4,
  PIM_STATUS_INVALID_CLOUD = 5,
  PIM_STATUS_DEGENERATE_GEOMETRY = 6,
  PIM_STATUS_MISSING_DATA = 7,
  PIM_STATUS_EMPTY_INTERIOR = 8,
  PIM_STATUS_COVERAGE = 9,
  PIM_STATUS_NOT_CONVERGED = 10,
  PIM_STATUS_INDEFINITE = 11,
  PIM_STATUS_SINGULAR = 12,
  PIM_STATUS_STAGNATION = 13,
  PIM_STATUS_PANIC = 14,
} PimStatus;

/**
 * Opaque point cloud handle.
 */
typedef struct PimCloud PimCloud;

/**
 * Summary of a Poisson solve.
 */
typedef struct PimSolveInfo {
  double t;
  size_t interior_count;
  size_t constrained_count;
  size_t iterations;
  double residual;
} PimSolveInfo;

/**
 * Summary of an eigensolve.
 */
typedef struct PimEigenInfo {
  double t;
  /**
   * 1 when the consistent mass matrix was replaced by its lumped form.
   */
  uint8_t lumped_mass;
  double max_residual;
} PimEigenInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pim_last_error_message(void);

/**
 * Loads a cloud file (`.csv` or whitespace-separated text).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PimStatus pim_cloud_load(const char *path, struct PimCloud **out);

/**
 * Quasi-uniform sampling of the unit disk with about `n_target` points.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PimStatus pim_cloud_sample_disk(size_t n_target, uint64_t seed, struct PimCloud **out);

/**
 * Builds a cloud from `n` row-major points of dimension `dim` and `n`
 * boundary flags (nonzero = boundary).
 *
 * # Safety
 * `coords` must hold `n * dim` values, `boundary` `n` bytes, and `out` must
 * be a valid pointer.
 */
enum PimStatus pim_cloud_from_arrays(const double *coords,
                                     size_t n,
                                     size_t dim,
                                     size_t intrinsic_dim,
                                     const uint8_t *boundary,
                                     struct PimCloud **out);

/**
 * Releases a cloud; null is ignored.
 *
 * # Safety
 * `cloud` must come from this library and not be used afterwards.
 */
void pim_cloud_free(struct PimCloud *cloud);

/**
 * Number of samples, or 0 for null.
 *
 * # Safety
 * `cloud` must be null or a live handle.
 */
size_t pim_cloud_len(const struct PimCloud *cloud);

/**
 * Estimates missing volume and boundary weights from `neighbors` nearest
 * samples (0 selects the default).
 *
 * # Safety
 * `cloud` must be a live handle.
 */
enum PimStatus pim_cloud_estimate_weights(struct PimCloud *cloud, size_t neighbors);

/**
 * Copies the volume weights into `out` (length `len` = cloud size).
 *
 * # Safety
 * `cloud` must be a live handle and `out` hold `len` doubles.
 */
enum PimStatus pim_cloud_volume_weights(const struct PimCloud *cloud, double *out, size_t len);

/**
 * Volume-constrained Poisson solve with per-sample `f` and `g` (each of
 * length `len` = cloud size); writes the solution to `u_out`. Missing
 * weights are estimated on a copy. `info` may be null.
 *
 * # Safety
 * Pointers must be valid for `len` doubles; `cloud` must be a live handle.
 */
enum PimStatus pim_solve_poisson(const struct PimCloud *cloud,
                                 double t,
                                 const double *f,
                                 const double *g,
                                 double *u_out,
                                 size_t len,
                                 struct PimSolveInfo *info);

/**
 * The `m` smallest Dirichlet eigenvalues of the volume-constrained
 * discretization, ascending, written to `values_out`. `info` may be null.
 *
 * # Safety
 * `values_out` must hold `m` doubles; `cloud` must be a live handle.
 */
enum PimStatus pim_eigenvalues(const struct PimCloud *cloud,
                               double t,
                               size_t m,
                               uint64_t seed,
                               double *values_out,
                               struct PimEigenInfo *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIMVC_H */
