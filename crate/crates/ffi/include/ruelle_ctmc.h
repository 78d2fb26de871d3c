#ifndef RUELLE_CTMC_H
#define RUELLE_CTMC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum RuelleStatus {
  RUELLE_STATUS_OK = 0,
  RUELLE_STATUS_NULL_POINTER = 1,
  RUELLE_STATUS_INVALID_ARGUMENT = 2,
  RUELLE_STATUS_INVALID_MODEL = 3,
  RUELLE_STATUS_DEGENERATE_SPECTRUM = 4,
  RUELLE_STATUS_NUMERICAL = 5,
  RUELLE_STATUS_INVALID_CYLINDER = 6,
  RUELLE_STATUS_PANIC = 7,
} RuelleStatus;

// Which functional plays the role of the Gibbs state.
typedef enum RuelleNuMode {
  RUELLE_NU_MODE_LITERAL = 0,
  RUELLE_NU_MODE_H_TRANSFORM = 1,
} RuelleNuMode;

// Opaque model handle.
typedef struct RuelleModel RuelleModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ruelle_version(void);

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library from the same thread.
const char *ruelle_last_error(void);

// Parse a JSON model file from NUL-terminated UTF-8 text.
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum RuelleStatus ruelle_model_from_json(const char *json, struct RuelleModel **out);

// Build a model from an `n * n` row-major generator (entry `(i, j)` is the
// rate from `j` to `i`) and an optional potential of length `n`.
//
// # Safety
// `generator` must hold `n * n` values, `potential` is null or holds `n`
// values, and `out` must be valid.
enum RuelleStatus ruelle_model_from_generator(size_t n,
                                              const double *generator,
                                              const double *potential,
                                              struct RuelleModel **out);

// Release a model. Null is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void ruelle_model_free(struct RuelleModel *model);

// Number of states, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t ruelle_model_n(const struct RuelleModel *model);

// Write `e^{tL}` row-major into `out[n * n]`.
//
// # Safety
// `model` must be live and `out` must hold `n * n` values.
enum RuelleStatus ruelle_semigroup(const struct RuelleModel *model, double t, double *out);

// Write the stationary vector into `out[n]`.
//
// # Safety
// `model` must be live and `out` must hold `n` values.
enum RuelleStatus ruelle_stationary(const struct RuelleModel *model, double *out);

// Perron root and eigenvectors of `L + V`, normalized by `sum mu = 1` and
// `sum u mu = 1`. Any of the outputs may be null.
//
// # Safety
// `model` must be live; non-null `u` and `mu` must hold `n` values.
enum RuelleStatus ruelle_perron(const struct RuelleModel *model,
                                double *lambda,
                                double *u,
                                double *mu);

// Stationary path measure of the cylinder `{X_{ticks[k]} = states[k]}`.
//
// # Safety
// `model` must be live, `ticks` and `states` must hold `len` values.
enum RuelleStatus ruelle_eval_p(const struct RuelleModel *model,
                                const uint64_t *ticks,
                                const uint32_t *states,
                                size_t len,
                                double *out);

// Gibbs functional of a cylinder in the given mode.
//
// # Safety
// As for [`ruelle_eval_p`].
enum RuelleStatus ruelle_eval_nu(const struct RuelleModel *model,
                                 enum RuelleNuMode mode,
                                 const uint64_t *ticks,
                                 const uint32_t *states,
                                 size_t len,
                                 double *out);

// The measure `rho = f_V nu` of a cylinder in the given mode.
//
// # Safety
// As for [`ruelle_eval_p`].
enum RuelleStatus ruelle_eval_rho(const struct RuelleModel *model,
                                  enum RuelleNuMode mode,
                                  const uint64_t *ticks,
                                  const uint32_t *states,
                                  size_t len,
                                  double *out);

// Kolmogorov consistency defect of both functionals at time `t_ticks`.
//
// # Safety
// `model` must be live; `literal` and `h_transform` must be valid.
enum RuelleStatus ruelle_kolmogorov_defect(const struct RuelleModel *model,
                                           uint64_t t_ticks,
                                           double *literal,
                                           double *h_transform);

// Monte Carlo estimate of `e^{t(L+V)}` at entry `(j0, i0)` with its
// standard error. The result depends only on `seed`.
//
// # Safety
// `model` must be live; `value` and `std_error` must be valid.
enum RuelleStatus ruelle_fk_estimate(const struct RuelleModel *model,
                                     uint32_t i0,
                                     uint32_t j0,
                                     double t,
                                     size_t n_paths,
                                     uint64_t seed,
                                     double *value,
                                     double *std_error);

// Run the identity suites at the given times and return the JSON report
// in `*out`. `*all_pass` (if non-null) is set to 1 when every identity
// holds, else 0.
//
// # Safety
// `model` must be live, `t_ticks` must hold `n_times` values and `out`
// must be valid. Free the string with [`ruelle_string_free`].
enum RuelleStatus ruelle_verify_json(const struct RuelleModel *model,
                                     const uint64_t *t_ticks,
                                     size_t n_times,
                                     size_t n_random,
                                     uint64_t seed,
                                     int32_t *all_pass,
                                     char **out);

// Release a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void ruelle_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUELLE_CTMC_H */
