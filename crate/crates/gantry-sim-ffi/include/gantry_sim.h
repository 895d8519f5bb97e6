#ifndef GANTRY_SIM_H
#define GANTRY_SIM_H

/* Generated by cbindgen from the gantry-sim-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a C API call.
typedef enum GsimStatus {
  GSIM_STATUS_OK = 0,
  // A pointer argument was null or a buffer too small.
  GSIM_STATUS_INVALID_ARGUMENT = 1,
  // Configuration could not be parsed or failed validation.
  GSIM_STATUS_CONFIG = 2,
  // The simulation itself failed (travel range, non-finite state, ...).
  GSIM_STATUS_SIMULATION = 3,
  // Filesystem problem while writing results.
  GSIM_STATUS_IO = 4,
} GsimStatus;

// Opaque run configuration handle.
typedef struct GsimConfig GsimConfig;

// Opaque simulated-trajectory handle (states plus the ideal profile they
// were commanded to follow).
typedef struct GsimTrajectory GsimTrajectory;

// Carriage tracking-error metrics, mirrored from the core crate.
typedef struct GsimMetrics {
  // RMS position error vs the ideal motion (m).
  double rms_pos_error;
  // Peak absolute position error (m).
  double max_abs_pos_error;
  // RMS velocity error (m/s).
  double rms_vel_error;
  // Peak velocity excursion in the transition regions (m/s).
  double transition_overshoot;
  // Time for the position error to stay inside the settle band (s).
  double settle_time;
} GsimMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. Valid until
// the next failing call; never null.
const char *gsim_last_error_message(void);

// Library version as a static string.
const char *gsim_version(void);

// Create a configuration with the reference machine defaults.
//
// # Safety
// `out` must be a valid pointer.
enum GsimStatus gsim_config_default(struct GsimConfig **out);

// Parse a TOML configuration document.
//
// # Safety
// `text` must be a valid NUL-terminated string, `out` a valid pointer.
enum GsimStatus gsim_config_parse(const char *text, struct GsimConfig **out);

// Override the integrator step size (s).
//
// # Safety
// `config` must be a live handle from this API.
enum GsimStatus gsim_config_set_dt(struct GsimConfig *config, double dt);

// Attach (or replace) the carriage damper.
//
// # Safety
// `config` must be a live handle from this API.
enum GsimStatus gsim_config_set_damper(struct GsimConfig *config,
                                       double m7,
                                       double k7,
                                       double beta7);

// Remove the carriage damper: simulations use the 12-state bare machine.
//
// # Safety
// `config` must be a live handle from this API.
enum GsimStatus gsim_config_remove_damper(struct GsimConfig *config);

// Release a configuration handle. Null is a no-op.
//
// # Safety
// `config` must have come from this API and not been freed before.
void gsim_config_free(struct GsimConfig *config);

// Simulate the configured print move from rest and return a trajectory
// handle.
//
// # Safety
// `config` must be a live handle, `out` a valid pointer.
enum GsimStatus gsim_simulate(const struct GsimConfig *config, struct GsimTrajectory **out);

// Number of recorded samples.
//
// # Safety
// `trajectory` must be a live handle; null returns 0.
size_t gsim_trajectory_rows(const struct GsimTrajectory *trajectory);

// State dimension per sample: 12 without the damper, 14 with it.
//
// # Safety
// `trajectory` must be a live handle; null returns 0.
size_t gsim_trajectory_state_dim(const struct GsimTrajectory *trajectory);

// Copy the sample times (s) into `buf`.
//
// # Safety
// `buf` must point to at least `len` doubles.
enum GsimStatus gsim_trajectory_times(const struct GsimTrajectory *trajectory,
                                      double *buf,
                                      size_t len);

// Copy one state sample (ordering `x1, x1_dot, ..., theta5, theta5_dot
// [, x5, x5_dot]`) into `buf`.
//
// # Safety
// `buf` must point to at least `len` doubles.
enum GsimStatus gsim_trajectory_state(const struct GsimTrajectory *trajectory,
                                      size_t row,
                                      double *buf,
                                      size_t len);

// Tracking-error metrics of the carriage against the ideal motion.
//
// # Safety
// `out` must be a valid pointer.
enum GsimStatus gsim_trajectory_metrics(const struct GsimTrajectory *trajectory,
                                        struct GsimMetrics *out);

// Write the trajectory as CSV (same schema as the command-line tool).
//
// # Safety
// `path` must be a valid NUL-terminated string.
enum GsimStatus gsim_trajectory_write_csv(const struct GsimTrajectory *trajectory,
                                          const char *path);

// Release a trajectory handle. Null is a no-op.
//
// # Safety
// `trajectory` must have come from this API and not been freed before.
void gsim_trajectory_free(struct GsimTrajectory *trajectory);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GANTRY_SIM_H */
