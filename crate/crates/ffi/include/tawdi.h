#ifndef TAWDI_H
#define TAWDI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TawdiStatus {
  TAWDI_STATUS_OK = 0,
  TAWDI_STATUS_NULL_POINTER = 1,
  TAWDI_STATUS_INVALID_ARGUMENT = 2,
  TAWDI_STATUS_DIMENSION = 3,
  TAWDI_STATUS_CONFIG = 4,
  TAWDI_STATUS_MODEL = 5,
  TAWDI_STATUS_DEGENERATE_WEIGHTS = 6,
  TAWDI_STATUS_DIVERGENCE = 7,
  TAWDI_STATUS_STATISTICS = 8,
  TAWDI_STATUS_IO = 9,
  TAWDI_STATUS_CHECKPOINT = 10,
  /**
   * A panic inside the library; the message has the details.
   */
  TAWDI_STATUS_INTERNAL = 11,
} TawdiStatus;

/**
 * Gaussian action disturbance `N(0, Σ)`.
 */
typedef struct TawdiDisturbance TawdiDisturbance;

/**
 * Feedforward tanh policy.
 */
typedef struct TawdiPolicy TawdiPolicy;

/**
 * Result of a two-sided Welch t-test.
 */
typedef struct TawdiWelch {
  double t;
  double df;
  double p;
} TawdiWelch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tawdi_version(void);

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. The pointer stays valid until the next library call on this thread.
 */
const char *tawdi_last_error(void);

/**
 * Creates a randomly initialized policy with layer widths `sizes`
 * (state dimension first, action dimension last).
 *
 * # Safety
 * `sizes` must point to `n_sizes` readable values and `out` must be writable.
 */
enum TawdiStatus tawdi_policy_new(const size_t *sizes,
                                  size_t n_sizes,
                                  double init_scale,
                                  uint64_t seed,
                                  struct TawdiPolicy **out);

/**
 * Reads a checkpoint written by `tawdi_policy_save` or the `tawdi` CLI.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be writable.
 */
enum TawdiStatus tawdi_policy_load(const char *path, struct TawdiPolicy **out);

/**
 * # Safety
 * `policy` must come from this library and `path` must be a NUL-terminated string.
 */
enum TawdiStatus tawdi_policy_save(const struct TawdiPolicy *policy, const char *path);

/**
 * Evaluates the policy at `state`, writing the action into `action`.
 *
 * # Safety
 * `policy` must come from this library; `state` and `action` must hold
 * `state_len` and `action_len` values.
 */
enum TawdiStatus tawdi_policy_forward(const struct TawdiPolicy *policy,
                                      const double *state,
                                      size_t state_len,
                                      double *action,
                                      size_t action_len);

/**
 * State dimension, or 0 for a null handle.
 *
 * # Safety
 * `policy` must be null or come from this library.
 */
size_t tawdi_policy_state_dim(const struct TawdiPolicy *policy);

/**
 * Action dimension, or 0 for a null handle.
 *
 * # Safety
 * `policy` must be null or come from this library.
 */
size_t tawdi_policy_action_dim(const struct TawdiPolicy *policy);

/**
 * # Safety
 * `policy` must be null or come from this library, and is invalid afterwards.
 */
void tawdi_policy_free(struct TawdiPolicy *policy);

/**
 * Builds a disturbance from a row-major `dim × dim` covariance.
 *
 * # Safety
 * `covariance` must hold `dim * dim` values and `out` must be writable.
 */
enum TawdiStatus tawdi_disturbance_new(size_t dim,
                                       const double *covariance,
                                       struct TawdiDisturbance **out);

/**
 * Writes `trace(Σ)` to `out`.
 *
 * # Safety
 * `model` must come from this library and `out` must be writable.
 */
enum TawdiStatus tawdi_disturbance_level(const struct TawdiDisturbance *model, double *out);

/**
 * Writes `action + ε`, `ε ~ N(0, Σ)`, into `out`. The draw is a pure
 * function of (`seed`, `stream`).
 *
 * # Safety
 * `model` must come from this library; `action` and `out` must hold `len` values.
 */
enum TawdiStatus tawdi_disturbance_inject(const struct TawdiDisturbance *model,
                                          const double *action,
                                          size_t len,
                                          uint64_t seed,
                                          uint64_t stream,
                                          double *out);

/**
 * # Safety
 * `model` must be null or come from this library, and is invalid afterwards.
 */
void tawdi_disturbance_free(struct TawdiDisturbance *model);

/**
 * Writes `exp(-temperature * cost)` to `out`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TawdiStatus tawdi_optimality_likelihood(double cost, double temperature, double *out);

/**
 * Rescales `n` likelihoods so they sum to `n`.
 *
 * # Safety
 * `likelihoods` and `out` must hold `n` values; they may alias.
 */
enum TawdiStatus tawdi_normalize_weights(const double *likelihoods, size_t n, double *out);

/**
 * Two-sided Welch t-test of sample `a` against sample `b`.
 *
 * # Safety
 * `a` and `b` must hold `na` and `nb` values and `out` must be writable.
 */
enum TawdiStatus tawdi_welch_t_test(const double *a,
                                    size_t na,
                                    const double *b,
                                    size_t nb,
                                    struct TawdiWelch *out);

/**
 * Runs the experiment described by a TOML config file and writes every
 * output file into `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum TawdiStatus tawdi_run_experiment(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAWDI_H */
