#ifndef QMZI_H
#define QMZI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

/**
 * Result codes. 0 to 3 mirror the command-line exit codes.
 */
typedef enum QmziStatus {
  QMZI_STATUS_OK = 0,
  QMZI_STATUS_VALIDATION_FAILED = 1,
  QMZI_STATUS_CONFIG = 2,
  QMZI_STATUS_DOMAIN = 3,
  QMZI_STATUS_DIVERGENT = 4,
  QMZI_STATUS_OUT_OF_VALIDITY = 5,
  QMZI_STATUS_UNDEFINED_SENSITIVITY = 6,
  QMZI_STATUS_PRECISION = 7,
  QMZI_STATUS_CUTOFF_TOO_SMALL = 8,
  QMZI_STATUS_UNSUPPORTED = 9,
  QMZI_STATUS_INTERNAL = 10,
  QMZI_STATUS_NULL_POINTER = 11,
  QMZI_STATUS_INVALID_STRING = 12,
  QMZI_STATUS_PANIC = 13,
} QmziStatus;

/**
 * How a sensitivity was obtained.
 */
typedef enum QmziMethod {
  QMZI_METHOD_CLOSED_FORM = 0,
  QMZI_METHOD_GAUSSIAN_ENGINE = 1,
  QMZI_METHOD_GOLDEN_SECTION = 2,
  QMZI_METHOD_GRID_SCAN = 3,
} QmziMethod;

/**
 * Phase encoding used for the Fisher information.
 */
typedef enum QmziEncoding {
  QMZI_ENCODING_REFERENCE_FREE = 0,
  QMZI_ENCODING_DIFFERENTIAL = 1,
  QMZI_ENCODING_ARM_A_ONLY = 2,
} QmziEncoding;

/**
 * Opaque configuration handle.
 */
typedef struct QmziConfig QmziConfig;

typedef struct QmziReport {
  double delta_phi;
  double signal_slope;
  double noise;
  /**
   * Positive means below the SQL.
   */
  double db_vs_sql;
  enum QmziMethod method;
} QmziReport;

typedef struct QmziAllocation {
  double r1_opt;
  double delta_phi_opt;
  double delta_phi_half;
  double improvement_db;
  enum QmziMethod method;
} QmziAllocation;

/**
 * Squeezing needed to reach the SQL. `*_db` is NaN when unreachable.
 */
typedef struct QmziSqueezing {
  bool vbs_reachable;
  double vbs_db;
  double vbs_r1;
  bool balanced_reachable;
  double balanced_db;
} QmziSqueezing;

typedef struct QmziQfi {
  double qfi;
  /**
   * Infinite when the QFI vanishes.
   */
  double qcrb;
  double residual;
} QmziQfi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library and valid until the next failing call on the same thread.
 */
const char *qmzi_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void qmzi_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *qmzi_version(void);

/**
 * New handle with the default configuration (N = 1e16, no squeezing,
 * 50:50 splitters, lossless).
 */
struct QmziConfig *qmzi_config_new(void);

/**
 * Parses key = value or JSON text into a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QmziStatus qmzi_config_parse(const char *text, struct QmziConfig **out);

/**
 * New handle holding a built-in preset.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QmziStatus qmzi_config_preset(const char *name, struct QmziConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be freed twice. Null is ignored.
 */
void qmzi_config_free(struct QmziConfig *cfg);

/**
 * Sets one base parameter. Keys are those of the configuration files:
 * n_photons, squeeze_xi, squeeze_db, theta, r1, r2, loss_a, loss_b, phi_a,
 * phi_b, delta_phi. Values are checked when a computation runs.
 *
 * # Safety
 * `cfg` must be a live handle and `key` a NUL-terminated string.
 */
enum QmziStatus qmzi_config_set(struct QmziConfig *cfg, const char *key, double value);

/**
 * Reads one base parameter; `theta` reports the angle actually used.
 *
 * # Safety
 * `cfg` must be a live handle, `key` a NUL-terminated string and `out` valid.
 */
enum QmziStatus qmzi_config_get(const struct QmziConfig *cfg, const char *key, double *out);

/**
 * Closed form where it applies, Gaussian engine otherwise.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum QmziStatus qmzi_sensitivity(const struct QmziConfig *cfg, struct QmziReport *out);

/**
 * Closed form only; `QMZI_STATUS_OUT_OF_VALIDITY` outside its domain.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum QmziStatus qmzi_closed_form(const struct QmziConfig *cfg, struct QmziReport *out);

/**
 * Gaussian engine only.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum QmziStatus qmzi_engine(const struct QmziConfig *cfg, struct QmziReport *out);

/**
 * Numerically optimal R1 for the handle's configuration.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum QmziStatus qmzi_optimize(const struct QmziConfig *cfg, struct QmziAllocation *out);

/**
 * Closed-form optimal R1 at loss `loss` in arm a and squeeze parameter `xi`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QmziStatus qmzi_optimal_r1(double loss, double xi, double *out);

/**
 * Loss at which the squeezed 50:50 interferometer falls back to the SQL.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QmziStatus qmzi_loss_rate_limit(double xi, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum QmziStatus qmzi_min_squeezing_for_sql(double loss, struct QmziSqueezing *out);

/**
 * Quantum Fisher information of the phase for the handle's configuration.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum QmziStatus qmzi_qfi(const struct QmziConfig *cfg,
                         enum QmziEncoding encoding,
                         struct QmziQfi *out);

/**
 * Runs the handle's sweep and returns the CSV table. `threads` = 0 uses
 * the global pool. Free the result with [`qmzi_string_free`].
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum QmziStatus qmzi_sweep_csv(const struct QmziConfig *cfg, size_t threads, char **out);

/**
 * Runs the built-in consistency checks with the given Fock cutoff (0 picks
 * the default) and returns the text report. Returns
 * `QMZI_STATUS_VALIDATION_FAILED` with the report still set if any check fails.
 *
 * # Safety
 * `out` must be a valid pointer. Free the result with [`qmzi_string_free`].
 */
enum QmziStatus qmzi_validate(size_t fock_cutoff, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMZI_H */
