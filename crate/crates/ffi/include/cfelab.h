#ifndef CFELAB_H
#define CFELAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CfelabStatus {
  CFELAB_STATUS_OK = 0,
  CFELAB_STATUS_NULL_POINTER = 1,
  CFELAB_STATUS_INVALID_ARGUMENT = 2,
  CFELAB_STATUS_OUT_OF_RANGE = 3,
  CFELAB_STATUS_OVERFLOW = 4,
  CFELAB_STATUS_INSUFFICIENT_DATA = 5,
  CFELAB_STATUS_INVARIANT_VIOLATION = 6,
  CFELAB_STATUS_BUFFER_TOO_SMALL = 7,
  CFELAB_STATUS_INTERNAL = 8,
} CfelabStatus;

typedef struct CfelabCensus CfelabCensus;

typedef struct CfelabModulus CfelabModulus;

typedef struct CfelabOrbit CfelabOrbit;

typedef struct CfelabLenStats {
  uint64_t q;
  uint64_t phi;
  double mean_len;
  double var_len;
  /**
   * `mean_len / (2 ln q)`.
   */
  double heilbronn_ratio;
} CfelabLenStats;

typedef struct CfelabOrbitSample {
  double t;
  double height;
  double x;
  double y;
} CfelabOrbitSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *cfelab_last_error(void);

/**
 * Crate version as a static NUL-terminated string.
 */
const char *cfelab_version(void);

/**
 * # Safety
 * `out_handle` must be null or point to writable storage for a handle.
 */
enum CfelabStatus cfelab_modulus_new(uint64_t q, struct CfelabModulus **out_handle);

/**
 * # Safety
 * `h` must be null or a handle from [`cfelab_modulus_new`] not yet freed.
 */
void cfelab_modulus_free(struct CfelabModulus *h);

/**
 * # Safety
 * `h` must be a live handle and `phi` writable.
 */
enum CfelabStatus cfelab_modulus_phi(const struct CfelabModulus *h, uint64_t *phi);

/**
 * Number of distinct prime factors.
 *
 * # Safety
 * `h` must be a live handle and `omega` writable.
 */
enum CfelabStatus cfelab_modulus_omega(const struct CfelabModulus *h, uint32_t *omega);

/**
 * `p'` with `p p' = -1 (mod q)`.
 *
 * # Safety
 * `h` must be a live handle and `dual` writable.
 */
enum CfelabStatus cfelab_modulus_dual_residue(const struct CfelabModulus *h,
                                              uint64_t p,
                                              uint64_t *dual);

/**
 * Canonical digits of `p/q`. Writes the digit count to `len`; fails with
 * `BufferTooSmall` when it exceeds `cap`, leaving `buf` untouched.
 *
 * # Safety
 * `buf` must hold `cap` values (it may be null when `cap` is 0) and `len`
 * must be writable.
 */
enum CfelabStatus cfelab_cfe_digits(uint64_t p, uint64_t q, uint64_t *buf, size_t cap, size_t *len);

/**
 * # Safety
 * `len` must be writable.
 */
enum CfelabStatus cfelab_cfe_len(uint64_t p, uint64_t q, size_t *len);

/**
 * Gauss measure of the first digit being `k` (0 for `k = 0`).
 */
double cfelab_digit_probability(uint64_t k);

/**
 * Section normalization by quadrature.
 */
double cfelab_kappa(void);

/**
 * Length statistics over all `p` coprime to `q`.
 *
 * # Safety
 * `stats` must be writable.
 */
enum CfelabStatus cfelab_len_stats(uint64_t q, struct CfelabLenStats *stats);

/**
 * # Safety
 * `out_handle` must be writable.
 */
enum CfelabStatus cfelab_orbit_new(uint64_t p, uint64_t q, struct CfelabOrbit **out_handle);

/**
 * # Safety
 * `h` must be null or a handle from [`cfelab_orbit_new`] not yet freed.
 */
void cfelab_orbit_free(struct CfelabOrbit *h);

/**
 * Height and fundamental-domain point of the orbit at time `t`.
 *
 * # Safety
 * `h` must be a live handle, not used concurrently, and `sample` writable.
 */
enum CfelabStatus cfelab_orbit_sample(struct CfelabOrbit *h,
                                      double t,
                                      struct CfelabOrbitSample *sample);

/**
 * Bounded-digit census for `q <= qmax`, digits at most `k`.
 *
 * # Safety
 * `out_handle` must be writable.
 */
enum CfelabStatus cfelab_census_new(uint64_t qmax, uint64_t k, struct CfelabCensus **out_handle);

/**
 * # Safety
 * `h` must be null or a handle from [`cfelab_census_new`] not yet freed.
 */
void cfelab_census_free(struct CfelabCensus *h);

/**
 * Members for denominator `q`; 0 beyond the census cap. With `strict`
 * every digit is at most `k`, otherwise the last may be `k + 1`.
 *
 * # Safety
 * `h` must be a live handle and `count` writable.
 */
enum CfelabStatus cfelab_census_count(const struct CfelabCensus *h,
                                      uint64_t q,
                                      bool strict,
                                      uint32_t *count);

/**
 * Growth exponent fitted over dyadic windows.
 *
 * # Safety
 * `h` must be a live handle and `exponent` writable.
 */
enum CfelabStatus cfelab_census_exponent(const struct CfelabCensus *h,
                                         bool strict,
                                         double *exponent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFELAB_H */
