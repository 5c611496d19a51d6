/* C API for the monolab experiment library. */

#ifndef MONOLAB_H
#define MONOLAB_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a monolab call.
 */
typedef enum MonolabStatus {
  MONOLAB_STATUS_OK = 0,
  MONOLAB_STATUS_NULL_POINTER = 1,
  MONOLAB_STATUS_INVALID_ARGUMENT = 2,
  MONOLAB_STATUS_PARSE_ERROR = 3,
  MONOLAB_STATUS_RUNTIME_ERROR = 4,
  /**
   * The requested value is not defined for this run.
   */
  MONOLAB_STATUS_UNAVAILABLE = 5,
  MONOLAB_STATUS_PANIC = 6,
} MonolabStatus;

/**
 * Learning scheme selector for experiment runs.
 */
typedef enum MonolabScheme {
  MONOLAB_SCHEME_COLD_TURKEY = 0,
  MONOLAB_SCHEME_DAGGER = 1,
  MONOLAB_SCHEME_TRAINING_WHEELS = 2,
  MONOLAB_SCHEME_PURE_STEREO = 3,
} MonolabScheme;

/**
 * Per-run scalar metrics addressable through `monolab_log_metric`.
 */
typedef enum MonolabMetric {
  MONOLAB_METRIC_MSE = 0,
  MONOLAB_METRIC_TPR = 1,
  MONOLAB_METRIC_FPR = 2,
  MONOLAB_METRIC_AUC = 3,
} MonolabMetric;

/**
 * Opaque experiment configuration.
 */
typedef struct MonolabConfig MonolabConfig;

/**
 * Opaque prepared experiment (world plus trained dictionary).
 */
typedef struct MonolabExperiment MonolabExperiment;

/**
 * Opaque record of one experiment run.
 */
typedef struct MonolabLog MonolabLog;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread, or null if none. The
 * pointer stays valid until the next failing monolab call on this thread.
 */
const char *monolab_last_error(void);

/**
 * Probability that `s` consecutive positive samples are all missed.
 */
enum MonolabStatus monolab_collision_prob_iid(double tpr, uint32_t s, double *out);

/**
 * Collision probability under the classification-persistence model.
 */
enum MonolabStatus monolab_collision_prob_markov(double p_ident,
                                                 double tpr,
                                                 uint32_t s,
                                                 double *out);

/**
 * Expected spurious turns per meter travelled.
 */
enum MonolabStatus monolab_spurious_turn_rate(double fpr, double fps, double speed, double *out);

/**
 * Mean squared error between two equal-length arrays.
 *
 * # Safety
 * `estimates` and `truth` must point to `len` readable f64 values.
 */
enum MonolabStatus monolab_mse(const double *estimates,
                               const double *truth,
                               size_t len,
                               double *out);

/**
 * Area under the ROC curve for estimates against truth labeled by
 * `truth > t_gt`.
 *
 * # Safety
 * `estimates` and `truth` must point to `len` readable f64 values.
 */
enum MonolabStatus monolab_roc_auc(const double *estimates,
                                   const double *truth,
                                   size_t len,
                                   double t_gt,
                                   double *out);

/**
 * Two-sided bootstrap p-value for a difference in means, deterministic for
 * a fixed seed.
 *
 * # Safety
 * `a` and `b` must point to `len_a` and `len_b` readable f64 values.
 */
enum MonolabStatus monolab_bootstrap_p(const double *a,
                                       size_t len_a,
                                       const double *b,
                                       size_t len_b,
                                       size_t iters,
                                       uint64_t seed,
                                       double *out);

/**
 * Allocates the default experiment configuration.
 */
struct MonolabConfig *monolab_config_default(void);

/**
 * Parses and validates a configuration from a JSON string. Returns null on
 * error; call `monolab_last_error` for the message.
 *
 * # Safety
 * `json` must be a valid NUL-terminated C string.
 */
struct MonolabConfig *monolab_config_from_json(const char *json);

/**
 * Serializes a configuration to JSON. Free the result with
 * `monolab_string_free`.
 *
 * # Safety
 * `cfg` must be a live pointer from a monolab config constructor.
 */
char *monolab_config_to_json(const struct MonolabConfig *cfg);

/**
 * # Safety
 * `cfg` must come from a monolab config constructor and not be freed twice.
 */
void monolab_config_free(struct MonolabConfig *cfg);

/**
 * # Safety
 * `s` must come from `monolab_config_to_json` and not be freed twice.
 */
void monolab_string_free(char *s);

/**
 * Validates the config, builds the world and trains the texton dictionary.
 * Returns null on error.
 *
 * # Safety
 * `cfg` must be a live pointer from a monolab config constructor.
 */
struct MonolabExperiment *monolab_prepare(const struct MonolabConfig *cfg);

/**
 * # Safety
 * `exp` must come from `monolab_prepare` and not be freed twice.
 */
void monolab_experiment_free(struct MonolabExperiment *exp);

/**
 * Runs one experiment. `dagger_beta` is only read for the Dagger scheme.
 * Returns null on error.
 *
 * # Safety
 * `exp` must be a live pointer from `monolab_prepare`.
 */
struct MonolabLog *monolab_experiment_run(const struct MonolabExperiment *exp,
                                          enum MonolabScheme scheme,
                                          double dagger_beta,
                                          uint64_t seed);

/**
 * # Safety
 * `log` must come from `monolab_experiment_run` and not be freed twice.
 */
void monolab_log_free(struct MonolabLog *log);

/**
 * Test-phase safety override count.
 *
 * # Safety
 * `log` must be a live pointer from `monolab_experiment_run`.
 */
enum MonolabStatus monolab_log_overrides_test(const struct MonolabLog *log, uint64_t *out);

/**
 * Test-phase avoidance turn count (including forced turns).
 *
 * # Safety
 * `log` must be a live pointer from `monolab_experiment_run`.
 */
enum MonolabStatus monolab_log_turns_test(const struct MonolabLog *log, uint64_t *out);

/**
 * Number of collected training samples.
 *
 * # Safety
 * `log` must be a live pointer from `monolab_experiment_run`.
 */
enum MonolabStatus monolab_log_training_samples(const struct MonolabLog *log, uint64_t *out);

/**
 * One test-phase quality metric. Returns `Unavailable` when the run has no
 * such value (for example AUC with one-class labels).
 *
 * # Safety
 * `log` must be a live pointer from `monolab_experiment_run`.
 */
enum MonolabStatus monolab_log_metric(const struct MonolabLog *log,
                                      enum MonolabMetric metric,
                                      double *out);

/**
 * Writes the per-frame log as CSV.
 *
 * # Safety
 * `log` must be live and `path` a valid NUL-terminated C string.
 */
enum MonolabStatus monolab_log_write_frames_csv(const struct MonolabLog *log, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOLAB_H */
