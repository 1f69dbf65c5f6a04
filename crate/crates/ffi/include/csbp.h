#ifndef CSBP_H
#define CSBP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum {
  CSBP_STATUS_OK = 0,
  CSBP_STATUS_NULL_POINTER = 1,
  CSBP_STATUS_DOMAIN = 2,
  CSBP_STATUS_OVERFLOW = 3,
  CSBP_STATUS_QUADRATURE = 4,
  CSBP_STATUS_INVALID_TREE = 5,
  CSBP_STATUS_PARSE = 6,
  CSBP_STATUS_SIZE_LIMIT = 7,
  CSBP_STATUS_UNSUPPORTED = 8,
  CSBP_STATUS_CONFIG = 9,
  CSBP_STATUS_IO = 10,
  CSBP_STATUS_FOUR_POINT = 11,
  CSBP_STATUS_UTF8 = 12,
  CSBP_STATUS_PANIC = 13,
} CsbpStatus;

/**
 * Conditioning regime selector for [`csbp_limit_value`].
 */
typedef enum {
  CSBP_REGIME_EXTINCTION = 0,
  CSBP_REGIME_KESTEN = 1,
  CSBP_REGIME_POISSON = 2,
  CSBP_REGIME_HIGH = 3,
} CsbpRegime;

/**
 * Model parameters `(beta, theta, alpha)`.
 */
typedef struct CsbpParams CsbpParams;

/**
 * Deterministic random stream.
 */
typedef struct CsbpStream CsbpStream;

/**
 * Pointed, possibly marked, real tree.
 */
typedef struct CsbpTree CsbpTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *csbp_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or come from this library and not be freed twice.
 */
void csbp_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
CsbpStatus csbp_params_new(double beta, double theta, double alpha, CsbpParams **out);

/**
 * # Safety
 * `p` must be null or a live handle.
 */
void csbp_params_free(CsbpParams *p);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
CsbpStatus csbp_stream_new(uint64_t seed, CsbpStream **out);

/**
 * Independent child stream `index` of `s`.
 *
 * # Safety
 * `s` and `out` must be valid pointers.
 */
CsbpStatus csbp_stream_split(const CsbpStream *s, uint64_t index, CsbpStream **out);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
void csbp_stream_free(CsbpStream *s);

/**
 * Survival rate `c_t`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_c_t(const CsbpParams *p, double t, double *out);

/**
 * Exponential rate `c~_t` of the surviving mass.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_c_tilde_t(const CsbpParams *p, double t, double *out);

/**
 * Laplace exponent `u(lambda, t)`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_u(const CsbpParams *p, double lambda, double t, double *out);

/**
 * Entrance density of the excursion measure at time `t`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_entrance_density(const CsbpParams *p, double t, double x, double *out);

/**
 * Transition density from `x` to `y`, absolutely continuous part.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_transition_density(const CsbpParams *p, double t, double x, double y, double *out);

/**
 * Martingale `M_t` at mass `z`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_martingale_m(const CsbpParams *p, double t, double z, double *out);

/**
 * Size-biased Laplace transform of the Poisson limit.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_biased_laplace_poisson(const CsbpParams *p, double s, double lambda, double *out);

/**
 * Conditional Laplace transform given mass `a` at time `t + s`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_conditional_laplace(const CsbpParams *p,
                                    double lambda,
                                    double s,
                                    double t,
                                    double a,
                                    double *out);

/**
 * Mass of `1 - exp(-lambda Z_s)` on extinction by time `t + s`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_extinction_functional(const CsbpParams *p,
                                      double lambda,
                                      double s,
                                      double t,
                                      double *out);

/**
 * `n`-th moment of the entrance law at time `t`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_moment(const CsbpParams *p, double t, uint32_t n, double *out);

/**
 * Limit of the conditioned Laplace transform in `regime`. `alpha` is only
 * read for the Poisson regime.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
CsbpStatus csbp_limit_value(const CsbpParams *p,
                            CsbpRegime regime,
                            double alpha,
                            double lambda,
                            double s,
                            double *out);

/**
 * Draws `Z_t` started from mass `x`.
 *
 * # Safety
 * `p`, `rng` and `out` must be valid pointers.
 */
CsbpStatus csbp_sample_transition(const CsbpParams *p,
                                  double x,
                                  double t,
                                  CsbpStream *rng,
                                  double *out);

/**
 * Draws `Z_t` under the excursion measure conditioned on survival.
 *
 * # Safety
 * `p`, `rng` and `out` must be valid pointers.
 */
CsbpStatus csbp_sample_entrance(const CsbpParams *p, double t, CsbpStream *rng, double *out);

/**
 * Draws the process with immigration at time `t` from zero.
 *
 * # Safety
 * `p`, `rng` and `out` must be valid pointers.
 */
CsbpStatus csbp_sample_zalpha(const CsbpParams *p, double t, CsbpStream *rng, double *out);

/**
 * Draws the mass at level `s` under the Kesten limit.
 *
 * # Safety
 * `p`, `rng` and `out` must be valid pointers.
 */
CsbpStatus csbp_sample_kesten(const CsbpParams *p, double s, CsbpStream *rng, double *out);

/**
 * Draws the mass at level `s` of a decorated Kesten backbone.
 *
 * # Safety
 * `p`, `rng` and `out` must be valid pointers.
 */
CsbpStatus csbp_sample_decorated(const CsbpParams *p, double s, CsbpStream *rng, double *out);

/**
 * Parses a tree from its text form.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
CsbpStatus csbp_tree_from_text(const char *text, CsbpTree **out);

/**
 * Text form of a tree. Release the result with [`csbp_string_free`].
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
CsbpStatus csbp_tree_to_text(const CsbpTree *t, char **out);

/**
 * Canonical representative of a tree.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
CsbpStatus csbp_tree_canonical(const CsbpTree *t, CsbpTree **out);

/**
 * Number of pointed vertices and total length.
 *
 * # Safety
 * All pointers must be valid.
 */
CsbpStatus csbp_tree_info(const CsbpTree *t, uintptr_t *n_pointed, double *total_length);

/**
 * # Safety
 * `t` must be null or a live handle.
 */
void csbp_tree_free(CsbpTree *t);

/**
 * Two-sided bound on the Gromov-Hausdorff distance of pointed trees.
 *
 * # Safety
 * All pointers must be valid.
 */
CsbpStatus csbp_gh_bounds(const CsbpTree *a, const CsbpTree *b, double *lower, double *upper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSBP_H */
