#ifndef FEMTOQ_H
#define FEMTOQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/**
 * Result of every fallible call.
 */
typedef enum FqStatus {
  FQ_STATUS_OK = 0,
  FQ_STATUS_NULL_POINTER = 1,
  FQ_STATUS_INVALID_ARGUMENT = 2,
  FQ_STATUS_CONFIG_ERROR = 3,
  FQ_STATUS_RUNTIME_ERROR = 4,
  FQ_STATUS_ORACLE_CAP_EXCEEDED = 5,
  FQ_STATUS_PANIC = 6,
} FqStatus;

/**
 * Scenario configuration.
 */
typedef struct FqConfig FqConfig;

/**
 * Exhaustive-search optimum.
 */
typedef struct FqOracle FqOracle;

/**
 * Completed density sweep.
 */
typedef struct FqRun FqRun;

/**
 * Outcome of one density step.
 */
typedef struct FqDensitySummary {
  size_t m;
  double c_mue;
  double min_fue_capacity;
  double sum_capacity;
  double jain;
  /**
   * Iteration at which the run converged, or the iterations run if it did not.
   */
  size_t iterations_to_converge;
  bool converged;
  bool qos_satisfied;
} FqDensitySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none.
 * Valid until the next failing call on the same thread.
 */
const char *fq_last_error(void);

/**
 * Library version, static storage.
 */
const char *fq_version(void);

/**
 * New configuration holding the built-in defaults.
 */
struct FqConfig *fq_config_default(void);

/**
 * Loads and validates a TOML scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum FqStatus fq_config_load(const char *path, struct FqConfig **out);

/**
 * # Safety
 * `config` must come from this library.
 */
enum FqStatus fq_config_set_seed(struct FqConfig *config, uint64_t seed);

/**
 * Sets the largest density of the sweep; rejected values leave the
 * configuration unchanged.
 *
 * # Safety
 * `config` must come from this library.
 */
enum FqStatus fq_config_set_m_max(struct FqConfig *config, size_t m_max);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards. NULL is ignored.
 */
void fq_config_free(struct FqConfig *config);

/**
 * Runs the full density sweep.
 *
 * # Safety
 * `config` must come from this library and `out` be writable.
 */
enum FqStatus fq_run(const struct FqConfig *config, struct FqRun **out);

/**
 * Number of density steps in a run.
 *
 * # Safety
 * `run` must come from this library or be NULL (returns 0).
 */
size_t fq_run_density_count(const struct FqRun *run);

/**
 * Summary of density step `index` (0-based; step `index` has `index + 1` femtocells).
 *
 * # Safety
 * `run` must come from this library and `out` be writable.
 */
enum FqStatus fq_run_summary(const struct FqRun *run, size_t index, struct FqDensitySummary *out);

/**
 * Writes the CSV artifacts of `run` under `dir`.
 *
 * # Safety
 * Handles must come from this library; `dir` must be a NUL-terminated string.
 */
enum FqStatus fq_run_write(const struct FqRun *run, const struct FqConfig *config, const char *dir);

/**
 * # Safety
 * `run` must come from this library and not be used afterwards. NULL is ignored.
 */
void fq_run_free(struct FqRun *run);

/**
 * Exhaustive search over the first `m` femtocells in admission order.
 *
 * # Safety
 * `config` must come from this library and `out` be writable.
 */
enum FqStatus fq_oracle(const struct FqConfig *config, size_t m, struct FqOracle **out);

/**
 * Optimal sum FUE capacity and whether it meets every QoS constraint.
 *
 * # Safety
 * `oracle` must come from this library; outputs must be writable.
 */
enum FqStatus fq_oracle_objective(const struct FqOracle *oracle, double *objective, bool *feasible);

/**
 * Copies the optimal power-level indices into `actions`, which holds `len` entries.
 *
 * # Safety
 * `oracle` must come from this library; `actions` must hold `len` writable entries.
 */
enum FqStatus fq_oracle_actions(const struct FqOracle *oracle, size_t *actions, size_t len);

/**
 * # Safety
 * `oracle` must come from this library and not be used afterwards. NULL is ignored.
 */
void fq_oracle_free(struct FqOracle *oracle);

/**
 * Residential log-distance path loss in dB.
 *
 * # Safety
 * `out` must be writable.
 */
enum FqStatus fq_pathloss_residential(double d, double pl0, double n, double d0, double *out);

/**
 * Indoor-to-outdoor path loss in dB at frequency `f_ghz`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FqStatus fq_pathloss_indoor_outdoor(double d, double f_ghz, double *out);

/**
 * Shannon capacity `log2(1 + sinr)` in b/s/Hz.
 *
 * # Safety
 * `out` must be writable.
 */
enum FqStatus fq_capacity(double sinr, double *out);

/**
 * Jain's fairness index of `len` values.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum FqStatus fq_jain_index(const double *values, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEMTOQ_H */
