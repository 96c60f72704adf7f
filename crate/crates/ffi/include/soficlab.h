#ifndef SOFICLAB_H
#define SOFICLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SoficlabStatus {
  SOFICLAB_STATUS_OK = 0,
  SOFICLAB_STATUS_NULL_POINTER = 1,
  SOFICLAB_STATUS_INVALID_ARGUMENT = 2,
  SOFICLAB_STATUS_GENERATION = 3,
  SOFICLAB_STATUS_RESOURCE = 4,
  SOFICLAB_STATUS_UNSUPPORTED = 5,
  SOFICLAB_STATUS_IO = 6,
  SOFICLAB_STATUS_FORMAT = 7,
  SOFICLAB_STATUS_BUFFER_TOO_SMALL = 8,
  SOFICLAB_STATUS_INTERNAL = 9,
} SoficlabStatus;

/*
 Result of a verification suite.
 */
typedef struct SoficlabReport SoficlabReport;

/*
 The sofic approximation σ_p of Σ × Λ on G_p.
 */
typedef struct SoficlabSigma SoficlabSigma;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Length in bytes of the last error message on this thread, without the
 terminating NUL.
 */
size_t soficlab_last_error_length(void);

/*
 Copies the last error message into `buf` as a NUL-terminated string,
 truncating to `cap - 1` bytes. Returns the number of bytes written.

 # Safety
 `buf` must be valid for `cap` bytes.
 */
size_t soficlab_last_error_message(char *buf, size_t cap);

/*
 # Safety
 `out` must be a valid pointer.
 */
enum SoficlabStatus soficlab_sigma_new(uint32_t p,
                                       uint32_t m,
                                       uint32_t k,
                                       struct SoficlabSigma **out);

/*
 # Safety
 `h` must come from `soficlab_sigma_new` and not be used afterwards.
 */
void soficlab_sigma_free(struct SoficlabSigma *h);

/*
 |G_p|; fails with `Unsupported` above 2^64.

 # Safety
 `h` and `out` must be valid pointers.
 */
enum SoficlabStatus soficlab_sigma_domain_size(const struct SoficlabSigma *h, uint64_t *out);

/*
 Image of point `x` under σ_p(g, h).

 # Safety
 `h` and `out` must be valid; each word pointer must be valid for its length.
 */
enum SoficlabStatus soficlab_sigma_apply(const struct SoficlabSigma *h,
                                         const int32_t *left,
                                         size_t left_len,
                                         const int32_t *right,
                                         size_t right_len,
                                         uint64_t x,
                                         uint64_t *out);

/*
 d_H(σ(g,e)σ(e,h), σ(e,h)σ(g,e)). Exact when `samples` is 0, otherwise
 sampled with a 99% Hoeffding radius written to `radius`.

 # Safety
 Pointers must be valid; each word pointer must be valid for its length.
 */
enum SoficlabStatus soficlab_sigma_commutator_defect(const struct SoficlabSigma *h,
                                                     const int32_t *left,
                                                     size_t left_len,
                                                     const int32_t *right,
                                                     size_t right_len,
                                                     uint64_t samples,
                                                     uint64_t seed,
                                                     double *value,
                                                     double *radius);

/*
 Runs a named suite. `samples == 0` selects exact mode.

 # Safety
 `suite` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SoficlabStatus soficlab_verify(const char *suite,
                                    uint32_t p,
                                    uint32_t m,
                                    uint32_t k,
                                    uint64_t seed,
                                    uint64_t samples,
                                    struct SoficlabReport **out);

/*
 # Safety
 `r` must come from `soficlab_verify` and not be used afterwards.
 */
void soficlab_report_free(struct SoficlabReport *r);

/*
 1 if every check passed, 0 otherwise, -1 for a null handle.

 # Safety
 `r` must be a valid handle or null.
 */
int32_t soficlab_report_all_pass(const struct SoficlabReport *r);

/*
 # Safety
 `r` must be a valid handle or null.
 */
size_t soficlab_report_check_count(const struct SoficlabReport *r);

/*
 Writes the report JSON with a terminating NUL. `needed` receives the
 required capacity; a short buffer yields `BufferTooSmall`.

 # Safety
 `r` and `needed` must be valid; `buf` must be valid for `cap` bytes or null.
 */
enum SoficlabStatus soficlab_report_json(const struct SoficlabReport *r,
                                         char *buf,
                                         size_t cap,
                                         size_t *needed);

/*
 |S_p| / 3^p, exact count rounded to double.

 # Safety
 `out` must be a valid pointer.
 */
enum SoficlabStatus soficlab_sp_density(uint32_t p, double *out);

/*
 |S_p △ (v + S_p)| / 3^p, the boundary of `T_p` under its worst ρ-generator.

 # Safety
 `out` must be a valid pointer.
 */
enum SoficlabStatus soficlab_boundary_ratio(uint32_t p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOFICLAB_H */
