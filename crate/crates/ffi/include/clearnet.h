#ifndef CLEARNET_H
#define CLEARNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClearnetStatus {
  CLEARNET_STATUS_OK = 0,
  CLEARNET_STATUS_NULL_POINTER = 1,
  CLEARNET_STATUS_INVALID_INPUT = 2,
  CLEARNET_STATUS_BUFFER_TOO_SMALL = 3,
  CLEARNET_STATUS_SINGULAR = 4,
  CLEARNET_STATUS_NO_CONVERGENCE = 5,
  CLEARNET_STATUS_PRECONDITION = 6,
  CLEARNET_STATUS_SPECTRAL_CONDITION = 7,
  CLEARNET_STATUS_EQUIVALENCE_FAILED = 8,
  CLEARNET_STATUS_PANIC = 9,
} ClearnetStatus;

/**
 * Opaque system handle.
 */
typedef struct ClearnetSystem ClearnetSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a system from an `n x n` row-major liability matrix and `n`
 * pre-shock assets. `external_assets` may be null, in which case the
 * pre-shock assets are used.
 *
 * # Safety
 * `liabilities` must point to `n * n` doubles, the asset arrays to `n`
 * doubles, and `out` to writable storage for one pointer.
 */
enum ClearnetStatus clearnet_system_new(size_t n,
                                        const double *liabilities,
                                        const double *pre_shock_assets,
                                        const double *external_assets,
                                        struct ClearnetSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from `clearnet_system_new` not yet freed.
 */
void clearnet_system_free(struct ClearnetSystem *sys);

/**
 * Node count including the sink, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t clearnet_system_node_count(const struct ClearnetSystem *sys);

/**
 * Clearing vector by the fictitious default sequence. `defaults` (one byte
 * per node, 1 = defaulted) and `iterations` may be null.
 *
 * # Safety
 * `sys` must be a live handle; `payments` must hold `len` doubles and
 * `defaults`, when given, `len` bytes.
 */
enum ClearnetStatus clearnet_clear(const struct ClearnetSystem *sys,
                                   double r,
                                   double r_a,
                                   double *payments,
                                   uint8_t *defaults,
                                   size_t len,
                                   size_t *iterations);

/**
 * Systemic losses `l - p` after the full-default shock with interpolation
 * `m`, cleared at recovery rate `r`.
 *
 * # Safety
 * `sys` must be a live handle and `sigma` must hold `len` doubles.
 */
enum ClearnetStatus clearnet_full_shock_loss(const struct ClearnetSystem *sys,
                                             double r,
                                             double m,
                                             double *sigma,
                                             size_t len);

/**
 * Generalized Katz centrality with attenuation `r` and interpolation `m`.
 *
 * # Safety
 * `sys` must be a live handle and `sigma` must hold `len` doubles.
 */
enum ClearnetStatus clearnet_katz(const struct ClearnetSystem *sys,
                                  double r,
                                  double m,
                                  double *sigma,
                                  size_t len);

/**
 * Compares full-shock clearing losses with the Katz measure. Returns
 * `CLEARNET_STATUS_EQUIVALENCE_FAILED` when the gap exceeds `tol` or the
 * shock does not clear in one step. `max_gap` may be null.
 *
 * # Safety
 * `sys` must be a live handle.
 */
enum ClearnetStatus clearnet_verify(const struct ClearnetSystem *sys,
                                    double r,
                                    double m,
                                    double tol,
                                    double *max_gap);

/**
 * Spectral radius of the relative-claims matrix.
 *
 * # Safety
 * `sys` must be a live handle and `radius` writable.
 */
enum ClearnetStatus clearnet_spectral_radius(const struct ClearnetSystem *sys, double *radius);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *clearnet_last_error(void);

/**
 * Static, NUL-terminated library version.
 */
const char *clearnet_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLEARNET_H */
