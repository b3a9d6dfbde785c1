#ifndef ECHO_LAB_H
#define ECHO_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Samples in a pattern from [`el_synthesize_pattern`].
 */
#define EL_PATTERN_LEN 2048

/**
 * Result of every call.
 */
typedef enum ElStatus {
  EL_STATUS_OK = 0,
  EL_STATUS_INVALID_ARGUMENT = 1,
  EL_STATUS_NUMERICAL = 2,
  EL_STATUS_NULL_POINTER = 3,
  EL_STATUS_BUFFER_TOO_SMALL = 4,
  EL_STATUS_PANIC = 5,
} ElStatus;

/**
 * Opaque handle: a spin ladder plus one parameter set.
 */
typedef struct ElModel ElModel;

/**
 * Model constants; `g = g_c / L` and `ε = σ / L` are derived internally.
 */
typedef struct ElModelParams {
  double mu;
  double g_c;
  double kick;
  double period;
  double sigma;
} ElModelParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread into `buf` as a NUL-terminated
 * string, truncating if needed. Returns the full length including the NUL,
 * or 0 if there is no error. `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t el_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *el_version(void);

/**
 * Creates a model for `n_atoms` atoms. On success `*out` owns the handle.
 *
 * # Safety
 * `params` must point to a valid `ElModelParams`; `out` must be writable.
 */
enum ElStatus el_model_new(uint32_t n_atoms,
                           const struct ElModelParams *params,
                           struct ElModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from [`el_model_new`] not yet freed.
 */
void el_model_free(struct ElModel *model);

/**
 * Hilbert-space dimension `N + 1`, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t el_model_dim(const struct ElModel *model);

/**
 * Writes `M(n)` for `n = 0..=n_max` from Fock state `k = k_twice / 2`.
 * `out` must hold at least `n_max + 1` values.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid for `len` writes.
 */
enum ElStatus el_model_fidelity_curve(const struct ElModel *model,
                                      int64_t k_twice,
                                      size_t n_max,
                                      double *out,
                                      size_t len);

/**
 * Writes `M_lk(n) = |⟨l|(U_ε†)ⁿUⁿ|k⟩|²` for `n = 0..=n_max`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid for `len` writes.
 */
enum ElStatus el_model_echo_row(const struct ElModel *model,
                                int64_t l_twice,
                                int64_t k_twice,
                                size_t n_max,
                                double *out,
                                size_t len);

/**
 * `|⟨θ, φ|l⟩|²` for the coherent state at polar angle `theta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ElStatus el_coherent_overlap(uint32_t n_atoms, double theta, int64_t l_twice, double *out);

/**
 * Two-well density `P(x)` on the default packet pair of width `width`,
 * containing fidelity amplitude `f_re + i f_im`. A positive `noise` adds
 * seeded multiplicative noise of that relative size. Writes
 * [`EL_PATTERN_LEN`] samples.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum ElStatus el_synthesize_pattern(double width,
                                    double f_re,
                                    double f_im,
                                    double noise,
                                    uint64_t seed,
                                    double *out,
                                    size_t len);

/**
 * Fits `|f̃|` and its phase from a pattern on the default packet pair.
 *
 * # Safety
 * `pattern` must be valid for `len` reads; `magnitude` and `phase` must
 * be writable.
 */
enum ElStatus el_extract_fidelity(double width,
                                  const double *pattern,
                                  size_t len,
                                  double *magnitude,
                                  double *phase);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECHO_LAB_H */
