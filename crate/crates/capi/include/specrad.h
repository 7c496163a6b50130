#ifndef SPECRAD_H
#define SPECRAD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes for every entry point.
 */
typedef enum {
  SPECRAD_STATUS_OK = 0,
  SPECRAD_STATUS_NULL_POINTER = 1,
  SPECRAD_STATUS_INVALID_INPUT = 2,
  SPECRAD_STATUS_DOMAIN_ERROR = 3,
  SPECRAD_STATUS_CAPACITY_EXCEEDED = 4,
  SPECRAD_STATUS_NUMERIC_ERROR = 5,
  SPECRAD_STATUS_DIVERGENCE = 6,
  SPECRAD_STATUS_BRACKET_FAILURE = 7,
  SPECRAD_STATUS_BUFFER_TOO_SMALL = 8,
  SPECRAD_STATUS_INTERNAL_PANIC = 9,
} SpecradStatus;

/**
 * Opaque handle: a composition system with its bound profile.
 */
typedef struct SpecradProfile SpecradProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Exact Thue-Morse moment `M_k(n)` as a decimal string.
 *
 * # Safety
 * `buf` must point to `buf_len` writable bytes; `written` may be null.
 */
SpecradStatus specrad_tm_moment(uint32_t k,
                                uint32_t n,
                                uint64_t cap,
                                char *buf,
                                size_t buf_len,
                                size_t *written);

/**
 * Aitken-accelerated growth estimate of the Thue-Morse moments.
 *
 * # Safety
 * `estimate` and `error_band` must be valid writable pointers.
 */
SpecradStatus specrad_tm_rho_estimate(uint32_t k,
                                      uint32_t n_max,
                                      uint64_t cap,
                                      double *estimate,
                                      double *error_band);

/**
 * The sine-product constant, truncated below `precision`.
 *
 * # Safety
 * `value` must be a valid writable pointer.
 */
SpecradStatus specrad_tm_delta1(double precision, double *value);

/**
 * The product ratio `xi(x)` on [0, 1].
 *
 * # Safety
 * `value` must be a valid writable pointer.
 */
SpecradStatus specrad_tm_xi(double x, double precision, double *value);

/**
 * Exact Stern moment `M_tau(N)` as a decimal string.
 *
 * # Safety
 * `buf` must point to `buf_len` writable bytes; `written` may be null.
 */
SpecradStatus specrad_stern_moment(uint32_t tau,
                                   uint32_t level,
                                   char *buf,
                                   size_t buf_len,
                                   size_t *written);

/**
 * Dominant eigenvalue of the exact Stern transfer matrix.
 *
 * # Safety
 * `sigma` and `residual` must be valid writable pointers.
 */
SpecradStatus specrad_stern_sigma(uint32_t tau, double *sigma, double *residual);

/**
 * Exact moment/operator identity check at `(tau, level)`; writes 1 on pass.
 *
 * # Safety
 * `pass` must be a valid writable pointer.
 */
SpecradStatus specrad_stern_identity_check(uint32_t tau, uint32_t level, uint8_t *pass);

/**
 * Builds the Thue-Morse profile at weight exponent `tau` (`tau >= 2`).
 *
 * # Safety
 * `out` must be a valid writable pointer; the handle must be released with
 * [`specrad_profile_free`].
 */
SpecradStatus specrad_profile_new_tm(uint32_t tau, SpecradProfile **out);

/**
 * Builds the Stern profile at weight exponent `tau` (`tau >= 1`).
 *
 * # Safety
 * `out` must be a valid writable pointer; the handle must be released with
 * [`specrad_profile_free`].
 */
SpecradStatus specrad_profile_new_stern(uint32_t tau, SpecradProfile **out);

/**
 * Releases a profile handle; null is a no-op.
 *
 * # Safety
 * `handle` must come from `specrad_profile_new_*` and not be freed twice.
 */
void specrad_profile_free(SpecradProfile *handle);

/**
 * Scalar profile data: `kappa0`, `eta`, `c1`, `c2` (any pointer may be null).
 *
 * # Safety
 * Non-null pointers must be writable; `handle` must be a live profile.
 */
SpecradStatus specrad_profile_constants(const SpecradProfile *handle,
                                        double *kappa0,
                                        double *eta,
                                        double *c1,
                                        double *c2);

/**
 * Certified radius bracket of the profile.
 *
 * # Safety
 * `rho_lo` and `rho_hi` must be valid writable pointers; `handle` must be a
 * live profile.
 */
SpecradStatus specrad_profile_bracket(const SpecradProfile *handle, double *rho_lo, double *rho_hi);

/**
 * Growth-rate estimate from `r_max` iterate norms on a `grid_points` grid.
 *
 * # Safety
 * `estimate` and `error_band` must be valid writable pointers; `handle`
 * must be a live profile.
 */
SpecradStatus specrad_profile_growth(const SpecradProfile *handle,
                                     uint32_t r_max,
                                     size_t grid_points,
                                     double *estimate,
                                     double *error_band);

/**
 * Sweeps the orbit hypotheses; writes 1 when every family holds.
 *
 * # Safety
 * `pass` must be a valid writable pointer; `handle` must be a live profile.
 */
SpecradStatus specrad_profile_verify(const SpecradProfile *handle,
                                     size_t samples,
                                     uint32_t k_max,
                                     uint32_t ell_max,
                                     uint64_t seed,
                                     uint8_t *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECRAD_H */
