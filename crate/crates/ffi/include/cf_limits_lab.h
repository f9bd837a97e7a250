#ifndef CF_LIMITS_LAB_H
#define CF_LIMITS_LAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_DOMAIN = 3,
  CF_STATUS_PARSE = 4,
  CF_STATUS_CONFIG = 5,
  CF_STATUS_PRECONDITION = 6,
  CF_STATUS_DIGIT_OVERFLOW = 7,
  CF_STATUS_BEYOND_HORIZON = 8,
  CF_STATUS_IO = 9,
  CF_STATUS_JSON = 10,
  /**
   * The output buffer is too small; the required length was written.
   */
  CF_STATUS_BUFFER_TOO_SMALL = 11,
  /**
   * The sampler has produced all of its digits.
   */
  CF_STATUS_EXHAUSTED = 12,
  CF_STATUS_PANIC = 13,
} CfStatus;

typedef enum CfVerdictKind {
  CF_VERDICT_KIND_INFINITELY_OFTEN = 0,
  CF_VERDICT_KIND_FINITELY_OFTEN = 1,
  CF_VERDICT_KIND_INCONCLUSIVE = 2,
} CfVerdictKind;

typedef enum CfVariant {
  CF_VARIANT_ZERO_ONE = 0,
  CF_VARIANT_CLT = 1,
} CfVariant;

typedef enum CfMethod {
  CF_METHOD_PARTIAL_SUM = 0,
  CF_METHOD_INTEGRAL_TEST = 1,
} CfMethod;

/**
 * Opaque event family.
 */
typedef struct CfEventFamily CfEventFamily;

/**
 * Opaque digit sampler.
 */
typedef struct CfSampler CfSampler;

typedef struct CfConstants {
  /**
   * phi(1)
   */
  double eta;
  /**
   * psi(1) = 2 log 2 - 1
   */
  double psi1;
  double theta;
  double rho_prime;
  double rho;
} CfConstants;

typedef struct CfVerdict {
  enum CfVerdictKind kind;
  /**
   * Upper bound on the series, NaN when none was certified.
   */
  double total_bound;
  /**
   * log10 of a divergence witness index, NaN when none.
   */
  double witness_log10;
} CfVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t cf_last_error_message(char *buf, size_t len);

/**
 * `log2(1 + x)` for `0 <= x <= 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CfStatus cf_gauss_cdf(double x, double *out);

/**
 * `γ(a_n = k)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CfStatus cf_prob_digit_eq(uint64_t k, double *out);

/**
 * `γ(a_n ≥ z)`; 1 for `z ≤ 1`.
 */
double cf_prob_digit_geq(double z);

/**
 * `γ(lo ≤ a_n ≤ hi)`.
 */
double cf_prob_digit_range(uint64_t lo, uint64_t hi);

/**
 * `γ̄([0, x] × [0, y])` on the natural extension.
 */
double cf_extended_rect_measure(double x, double y);

/**
 * Digits of `num/den` in (0, 1). Writes at most `cap` digits to `out` and the
 * full count to `out_len`; returns `BufferTooSmall` when `cap` is short.
 *
 * # Safety
 * `out` must be valid for `cap` writes (may be null when `cap` is 0), `out_len` for one.
 */
enum CfStatus cf_digits_of_rational(uint64_t num,
                                    uint64_t den,
                                    uint64_t *out,
                                    size_t cap,
                                    size_t *out_len);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CfStatus cf_constants(struct CfConstants *out);

/**
 * New sampler for `length` digits of trajectory `(master, index)`.
 * `mode` is one of `exact`, `mixture`, `float`, `hp:BITS`, `gamma:A`, `luroth`.
 *
 * # Safety
 * `mode` must be a NUL-terminated string and `out` valid for writes.
 */
enum CfStatus cf_sampler_new(const char *mode,
                             uint64_t master,
                             uint64_t index,
                             size_t length,
                             struct CfSampler **out);

/**
 * Next digit, or `Exhausted` after `length` digits.
 *
 * # Safety
 * `s` must come from `cf_sampler_new`; `out` must be valid for writes.
 */
enum CfStatus cf_sampler_next(struct CfSampler *s, uint64_t *out);

/**
 * # Safety
 * `s` must be null or come from `cf_sampler_new`, and not be used afterwards.
 */
void cf_sampler_free(struct CfSampler *s);

/**
 * Family from JSON, e.g. `{"kind":"threshold","b":"n"}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum CfStatus cf_family_from_json(const char *json, struct CfEventFamily **out);

/**
 * Registered family by name, e.g. `sqrt-nlogn-equal`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` valid for writes.
 */
enum CfStatus cf_family_preset(const char *name, struct CfEventFamily **out);

/**
 * `γ(A_n)`.
 *
 * # Safety
 * `f` must come from a family constructor; `out` must be valid for writes.
 */
enum CfStatus cf_family_prob(const struct CfEventFamily *f, uint64_t n, double *out);

/**
 * Whether digit `a` at index `n` lies in `A_n`.
 *
 * # Safety
 * `f` must come from a family constructor; `out` must be valid for writes.
 */
enum CfStatus cf_family_contains(const struct CfEventFamily *f, uint64_t n, uint64_t a, bool *out);

/**
 * # Safety
 * `f` must be null or come from a family constructor, and not be used afterwards.
 */
void cf_family_free(struct CfEventFamily *f);

/**
 * Series verdict for the family; `horizon` must be at least 1000.
 * `variant` takes a `CfVariant` value and `method` a `CfMethod` value.
 *
 * # Safety
 * `f` must come from a family constructor; `out` must be valid for writes.
 */
enum CfStatus cf_series_verdict(const struct CfEventFamily *f,
                                uint32_t variant,
                                uint64_t horizon,
                                uint32_t method,
                                struct CfVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CF_LIMITS_LAB_H */
