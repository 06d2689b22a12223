/* C interface for the nonholo library.
 *
 * Maintained by hand in lockstep with crates/capi/src/lib.rs; the crate's
 * smoke tests exercise every declaration below through the C ABI.
 *
 * Conventions:
 *   - nh_system is an opaque handle; create with nh_system_disk_new or
 *     nh_system_from_config, release with nh_system_free.
 *   - Array arguments are caller-allocated double buffers of length
 *     nh_system_dim(sys).
 *   - Fallible calls return nh_status; on failure, nh_last_error copies a
 *     human-readable message.
 */

#ifndef NONHOLO_H
#define NONHOLO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nh_status {
  NH_OK = 0,
  NH_BAD_ARGUMENT = 1,
  NH_INVALID_PARAMS = 2,
  NH_SINGULAR_METRIC = 3,
  NH_RANK_DEFICIENT = 4,
  NH_ILL_CONDITIONED = 5,
  NH_UNSUPPORTED_ORDER = 6,
  NH_STEP_TOO_LARGE = 7,
  NH_NONFINITE = 8,
  NH_SCHEMA = 9,
  NH_BUFFER_TOO_SMALL = 10,
  NH_INTERNAL = 11
} nh_status;

typedef enum nh_model {
  NH_MODEL_FULL = 0,
  NH_MODEL_ZEROTH = 1,
  NH_MODEL_FIRST = 2
} nh_model;

typedef struct nh_system nh_system;

/* Copy the last error message into buf (always NUL-terminated when len > 0).
 * Returns the full message length, excluding the terminator. */
size_t nh_last_error(char *buf, size_t len);

/* Vertical rolling disk: mass (kg), planar inertia I (kg m^2), rolling-axis
 * inertia J (kg m^2), radius R (m), friction coefficient mu (kg/s), and the
 * time-scale ratio epsilon. All parameters must be strictly positive. */
nh_status nh_system_disk_new(double mass, double inertia_plane,
                             double inertia_roll, double radius, double mu,
                             double epsilon, nh_system **out);

/* Build a system from TOML text using the CLI config schema
 * (system.kind, system.params.*, sim.epsilon). */
nh_status nh_system_from_config(const char *text, nh_system **out);

void nh_system_free(nh_system *sys);

/* Configuration-space dimension; 0 for a null handle. */
uint32_t nh_system_dim(const nh_system *sys);

/* Time-scale ratio; NaN for a null handle. */
double nh_system_epsilon(const nh_system *sys);

nh_status nh_system_set_epsilon(nh_system *sys, double epsilon);

/* Truncated slip velocity (order 0, 1 or 2) at (q, v); v may be ambient and
 * is projected onto the admissible distribution internally. Writes dim
 * doubles to out. */
nh_status nh_slip(const nh_system *sys, const double *q, const double *v,
                  uint32_t order, double *out);

/* Ideal constraint reaction force at (q, v); writes dim doubles. */
nh_status nh_lagrange_multiplier(const nh_system *sys, const double *q,
                                 const double *v, double *out);

/* Right-hand side of the selected model; writes dim doubles to each of
 * out_dq and out_dv. */
nh_status nh_rhs(const nh_system *sys, nh_model model, const double *q,
                 const double *v, double *out_dq, double *out_dv);

nh_status nh_kinetic_energy(const nh_system *sys, const double *q,
                            const double *v, double *out);

/* Energy loss rate to friction (non-positive; zero on admissible
 * velocities). */
nh_status nh_dissipation_rate(const nh_system *sys, const double *q,
                              const double *v, double *out);

/* Upper bound on recorded rows for nh_simulate with this stepping. */
size_t nh_trajectory_capacity(double dt, double t_final,
                              uint32_t record_every);

/* Fixed-step RK4 integration of the selected model. Rows are
 * [t, q[0..n], v[0..n]] with stride 1 + 2 n, written to out_rows
 * (capacity max_rows rows); *rows_written receives the row count.
 * The full model requires dt <= epsilon / 20 (NH_STEP_TOO_LARGE). */
nh_status nh_simulate(const nh_system *sys, nh_model model, const double *q0,
                      const double *v0, double dt, double t_final,
                      uint32_t record_every, double *out_rows,
                      size_t max_rows, size_t *rows_written);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NONHOLO_H */
