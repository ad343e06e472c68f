#ifndef QUADMINI_H
#define QUADMINI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_NULL_POINTER = 1,
  QM_STATUS_INVALID_ARGUMENT = 2,
  QM_STATUS_SINGULAR = 3,
  QM_STATUS_OUT_OF_RANGE = 4,
  QM_STATUS_INTERNAL = 5,
} QmStatus;

typedef enum QmBubble {
  QM_BUBBLE_STANDARD = 0,
  QM_BUBBLE_CORNER = 1,
  QM_BUBBLE_LINEAR = 2,
  QM_BUBBLE_QUAD_SYM = 3,
} QmBubble;

/**
 * Opaque convergence-study result.
 */
typedef struct QmStudy QmStudy;

/**
 * Errors of one refinement level; rates are NaN on the first level.
 */
typedef struct QmLevelErrors {
  uint32_t level;
  uint32_t elements;
  double h1_u;
  double h1_rate;
  double l2_u;
  double l2_rate;
  double l2_p;
  double p_rate;
} QmLevelErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread (empty after
 * success). The pointer is valid until the next call on the same thread.
 */
const char *qm_last_error(void);

/**
 * Exact rank of the 9x10 macro-element matrix for `bubble` (a
 * [`QmBubble`] value).
 *
 * # Safety
 * `rank` must be null or point to writable memory for one `uint32_t`.
 */
enum QmStatus qm_macro_rank(int32_t bubble, uint32_t *rank);

/**
 * Writes the macro matrix row-major as 90 numerator/denominator pairs.
 *
 * # Safety
 * `numerators` and `denominators` must each point to 90 writable
 * `int64_t`.
 */
enum QmStatus qm_macro_matrix(int32_t bubble, int64_t *numerators, int64_t *denominators);

/**
 * Discrete inf-sup constant on refinement `level` (1..=4).
 *
 * # Safety
 * `beta` must point to a writable `double`.
 */
enum QmStatus qm_infsup(int32_t bubble, uint32_t level, double shear, double *beta);

/**
 * Runs a convergence study (`example` 1 or 2, levels `1..=max_level`).
 * On success `*out` receives a handle to release with [`qm_study_free`].
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum QmStatus qm_study_run(int32_t example,
                           int32_t bubble,
                           uint32_t max_level,
                           double shear,
                           struct QmStudy **out);

/**
 * Number of levels in a study (0 for a null handle).
 *
 * # Safety
 * `study` must be null or a live handle from [`qm_study_run`].
 */
size_t qm_study_levels(const struct QmStudy *study);

/**
 * Copies row `index` (0-based) of a study.
 *
 * # Safety
 * `study` must be a live handle and `row` must point to a writable
 * [`QmLevelErrors`].
 */
enum QmStatus qm_study_row(const struct QmStudy *study, size_t index, struct QmLevelErrors *row);

/**
 * Releases a study handle; null is ignored.
 *
 * # Safety
 * `study` must be null or a handle from [`qm_study_run`] not yet freed.
 */
void qm_study_free(struct QmStudy *study);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADMINI_H */
