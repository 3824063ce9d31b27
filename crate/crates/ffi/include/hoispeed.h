/* Generated by cbindgen; do not edit. */

#ifndef HOISPEED_H
#define HOISPEED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  HS_STATUS_NUMERICAL_FAILURE = 3,
  HS_STATUS_BUFFER_TOO_SMALL = 4,
  HS_STATUS_PANIC = 5,
} HsStatus;

typedef enum HsTermination {
  HS_TERMINATION_CONVERGED = 0,
  HS_TERMINATION_HORIZON_REACHED = 1,
  HS_TERMINATION_DIVERGED = 2,
  HS_TERMINATION_ALL_EXTINCT = 3,
} HsTermination;

typedef enum HsOutcomeKind {
  HS_OUTCOME_KIND_FIXED_POINT = 0,
  HS_OUTCOME_KIND_LIMIT_CYCLE = 1,
  HS_OUTCOME_KIND_UNBOUNDED = 2,
  HS_OUTCOME_KIND_ALL_EXTINCT = 3,
} HsOutcomeKind;

typedef enum HsTopology {
  HS_TOPOLOGY_TRANSITIVE_A = 0,
  HS_TOPOLOGY_TRANSITIVE_B = 1,
  HS_TOPOLOGY_TRANSITIVE_C = 2,
  HS_TOPOLOGY_INTRANSITIVE = 3,
} HsTopology;

typedef enum HsHoiKind {
  HS_HOI_KIND_SYMMETRIC = 0,
  HS_HOI_KIND_ASYM_AFFECTED_FIRST = 1,
  HS_HOI_KIND_ASYM_AFFECTED_SECOND = 2,
} HsHoiKind;

/**
 * Opaque system handle.
 */
typedef struct HsSystem HsSystem;

/**
 * Opaque trajectory handle.
 */
typedef struct HsTrajectory HsTrajectory;

/**
 * Integrator settings. `horizon <= 0` selects the default horizon rule,
 * `resolution_factor == 0` leaves only the absolute divergence cap and
 * `retain_samples == 0` keeps every sample.
 */
typedef struct HsIntegratorConfig {
  double dt;
  double omega;
  double extinction_threshold;
  double convergence_tol;
  size_t convergence_window;
  double horizon;
  double divergence_cap;
  double resolution_factor;
  uint64_t sample_stride;
  size_t retain_samples;
} HsIntegratorConfig;

/**
 * Classification result; `amplitude` and `period` are NaN when absent.
 */
typedef struct HsOutcome {
  enum HsOutcomeKind kind;
  size_t survivors;
  double amplitude;
  double period;
} HsOutcome;

/**
 * Steady state of a three-species, one-modifier system.
 */
typedef struct HsEquilibrium {
  double n[3];
  double m;
  double residual;
  double max_real_part;
} HsEquilibrium;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fills `out` with the default settings at speed 1.
 *
 * # Safety
 * `out` must be null or point to writable memory for one config.
 */
enum HsStatus hs_integrator_config_default(struct HsIntegratorConfig *out);

/**
 * Builds a canonical three-species system. `topology` and `kind` take the
 * values of [`HsTopology`] and [`HsHoiKind`].
 *
 * # Safety
 * `out` must be null or writable; on success it receives a handle owned by
 * the caller.
 */
enum HsStatus hs_system_new(int32_t topology,
                            int32_t kind,
                            double alpha_ab,
                            double alpha_ac,
                            double alpha_bc,
                            double beta,
                            struct HsSystem **out);

/**
 * # Safety
 * `system` must be a live handle from [`hs_system_new`] or null.
 */
enum HsStatus hs_system_set_beta(struct HsSystem *system, double beta);

/**
 * # Safety
 * `system` must be null or a handle from [`hs_system_new`] not yet freed.
 */
void hs_system_free(struct HsSystem *system);

/**
 * Integrates from unit abundances and modifiers.
 *
 * # Safety
 * `system` and `config` must be valid or null; `out` must be writable.
 */
enum HsStatus hs_simulate(const struct HsSystem *system,
                          const struct HsIntegratorConfig *config,
                          struct HsTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from [`hs_simulate`] not yet freed.
 */
void hs_trajectory_free(struct HsTrajectory *traj);

/**
 * Retained sample count, 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t hs_trajectory_len(const struct HsTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum HsStatus hs_trajectory_termination(const struct HsTrajectory *traj, enum HsTermination *out);

/**
 * Copies sample times into `buf` (capacity `cap`).
 *
 * # Safety
 * `traj` must be a live handle and `buf` must have `cap` writable doubles.
 */
enum HsStatus hs_trajectory_times(const struct HsTrajectory *traj, double *buf, size_t cap);

/**
 * Copies the abundance series of `species` (0 = A).
 *
 * # Safety
 * As [`hs_trajectory_times`].
 */
enum HsStatus hs_trajectory_species(const struct HsTrajectory *traj,
                                    size_t species,
                                    double *buf,
                                    size_t cap);

/**
 * Copies the series of modifier `index`.
 *
 * # Safety
 * As [`hs_trajectory_times`].
 */
enum HsStatus hs_trajectory_modifier(const struct HsTrajectory *traj,
                                     size_t index,
                                     double *buf,
                                     size_t cap);

/**
 * Classifies a trajectory; pass `amplitude_tol` or `window_fraction` <= 0
 * for the defaults.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum HsStatus hs_classify(const struct HsTrajectory *traj,
                          double amplitude_tol,
                          double window_fraction,
                          struct HsOutcome *out);

/**
 * Newton solve from unit abundances and modifiers plus the Jacobian
 * spectrum at the result.
 *
 * # Safety
 * `system` must be a live handle; `out` must be writable.
 */
enum HsStatus hs_steady_state(const struct HsSystem *system,
                              double omega,
                              struct HsEquilibrium *out);

/**
 * Nullification strength of the symmetric intransitive system; `n_out`
 * receives the three abundances at that point.
 *
 * # Safety
 * `beta_star` must be writable and `n_out` must hold three doubles.
 */
enum HsStatus hs_nullification(double alpha, double *beta_star, double *n_out);

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf`. Returns the full message length excluding the terminator, or 0 if
 * no error is recorded. A shorter buffer receives a truncated message.
 *
 * # Safety
 * `buf` must be null or hold `cap` writable bytes.
 */
size_t hs_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOISPEED_H */
