#ifndef RCURL_FFI_H
#define RCURL_FFI_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define RC_OK 0

#define RC_ERR_NULL 1

#define RC_ERR_CONFIG 2

#define RC_ERR_NUMERICAL 3

#define RC_ERR_PLANNING 4

#define RC_ERR_CHECKPOINT 5

#define RC_ERR_IO 6

#define RC_ERR_LENGTH 7

#define RC_ERR_UTF8 8

#define RC_ERR_PANIC 9

typedef enum RcOutcome {
  RC_OUTCOME_RUNNING = 0,
  RC_OUTCOME_GOAL = 1,
  RC_OUTCOME_TIMEOUT = 2,
  RC_OUTCOME_COLLISION = 3,
  RC_OUTCOME_OUT_OF_BOUNDS = 4,
} RcOutcome;

typedef struct RcController RcController;

typedef struct RcEnv RcEnv;

typedef struct RcTrainer RcTrainer;

typedef struct RcStep {
  double base_reward;
  double full_reward;
  double report_base;
  double report_constraint;
  bool terminal;
  bool truncated;
  enum RcOutcome outcome;
} RcStep;

/**
 * Summary of one training iteration. Values absent for the iteration are NaN.
 */
typedef struct RcIteration {
  uint64_t iteration;
  uint64_t env_steps;
  uint64_t grad_steps;
  int32_t phase;
  bool switched;
  double critic_loss;
  double actor_fit;
  double eval_reported;
  double eval_normalized;
} RcIteration;

/**
 * Per-step robot reward terms before weighting.
 */
typedef struct RcRewardTerms {
  double goal;
  double action;
  double velocity;
  double tracking;
  double progress;
} RcRewardTerms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, excluding the
 * terminating NUL.
 */
size_t rc_last_error_length(void);

/**
 * Copy the last error message into `buf` as a NUL-terminated string.
 * Returns `RC_ERR_LENGTH` if `len` is too small, in which case nothing is
 * written.
 */
int32_t rc_last_error_message(char *buf, size_t len);

/**
 * Create an environment by name (`pendulum_swingup`, `cartpole_balance`,
 * `cartpole_swingup`, `robot_nav`) with the given constraint weight. Resets
 * draw from a generator seeded with `seed`.
 */
int32_t rc_env_new(const char *name, double constraint_weight, uint64_t seed, struct RcEnv **out);

void rc_env_free(struct RcEnv *env);

/**
 * Observation width, or 0 for NULL.
 */
size_t rc_env_obs_dim(const struct RcEnv *env);

/**
 * Action width, or 0 for NULL.
 */
size_t rc_env_act_dim(const struct RcEnv *env);

/**
 * Start a new episode and write the first observation.
 */
int32_t rc_env_reset(struct RcEnv *env, double *obs, size_t obs_len);

/**
 * Apply one action. Actions are clipped to [-1, 1] by the environment.
 */
int32_t rc_env_step(struct RcEnv *env,
                    const double *action,
                    size_t act_len,
                    double *obs,
                    size_t obs_len,
                    struct RcStep *out);

/**
 * Controller that switches once the last `window` recorded fits are all
 * below `threshold`.
 */
int32_t rc_controller_new(double threshold, size_t window, struct RcController **out);

void rc_controller_free(struct RcController *c);

/**
 * Record one iteration's mean actor fit. `switched` (optional) is set when
 * this record caused the switch.
 */
int32_t rc_controller_record(struct RcController *c, double fit, bool *switched);

/**
 * Record an iteration without gradient steps.
 */
int32_t rc_controller_record_gap(struct RcController *c);

/**
 * 0 while training on the base reward, 1 after the switch, -1 for NULL.
 */
int32_t rc_controller_phase(const struct RcController *c);

/**
 * Writes the 1-based record index of the switch and returns 1 if it has
 * happened, 0 if not, -1 for NULL.
 */
int32_t rc_controller_switched_at(const struct RcController *c, uint64_t *iteration);

/**
 * Trainer for one seed from TOML config text (same format as the CLI).
 */
int32_t rc_trainer_new(const char *config_toml, uint64_t seed, struct RcTrainer **out);

void rc_trainer_free(struct RcTrainer *t);

/**
 * 1 once the step budget is spent, 0 before, -1 for NULL.
 */
int32_t rc_trainer_is_finished(const struct RcTrainer *t);

size_t rc_trainer_obs_dim(const struct RcTrainer *t);

size_t rc_trainer_act_dim(const struct RcTrainer *t);

int32_t rc_trainer_run_iteration(struct RcTrainer *t, struct RcIteration *out);

/**
 * Deterministic policy action for `obs`.
 */
int32_t rc_trainer_act(const struct RcTrainer *t,
                       const double *obs,
                       size_t obs_len,
                       double *action,
                       size_t act_len);

int32_t rc_trainer_save(const struct RcTrainer *t, const char *path);

int32_t rc_trainer_load(const char *path, struct RcTrainer **out);

/**
 * Base and full robot reward for a subset id (`gp`, `gpv`, `gpa`, `gpx`,
 * `full`).
 */
int32_t rc_compose_reward(const struct RcRewardTerms *terms,
                          double progress_weight,
                          double constraint_weight,
                          const char *subset,
                          double *base,
                          double *full);

/**
 * Map a reported return into [0, 1] given (lo, hi) bounds.
 */
int32_t rc_normalize_return(double g, double lo, double hi, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCURL_FFI_H */
