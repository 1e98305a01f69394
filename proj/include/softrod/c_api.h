/* C interface to the vectorized environment, for foreign-language bridges.
 *
 * All functions return SOFTROD_OK (0) on success or a negative status; the
 * message of the most recent failure on the calling thread is available
 * from softrod_last_error(). Arrays are caller-allocated and row-major.
 */
#ifndef SOFTROD_C_API_H
#define SOFTROD_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum softrod_status {
  SOFTROD_OK = 0,
  SOFTROD_ERR_ARGUMENT = -1, /* null pointer, bad task name, wrong shape */
  SOFTROD_ERR_CONFIG = -2,   /* unreadable or invalid config file */
  SOFTROD_ERR_RUNTIME = -3   /* any other simulator error */
};

typedef struct softrod_venv softrod_venv;

/* Per-env diagnostics of one step. */
typedef struct softrod_step_info {
  int32_t newton_iterations;
  int32_t solver_failure;
  int32_t success;
  int32_t action_clipped;
  double residual;
  double max_penetration;
  double distance;
  double yaw_error;
} softrod_step_info;

/* `config_path` may be NULL (defaults). `task` overrides the config's task
 * when non-NULL. Env i is seeded with seed + i. workers <= 0 uses all
 * available threads (capped by SOFTROD_THREADS). */
int softrod_create(const char* task, const char* config_path, size_t num_envs,
                   uint64_t seed, int workers, softrod_venv** out);
void softrod_destroy(softrod_venv* venv);

size_t softrod_num_envs(const softrod_venv* venv);
size_t softrod_action_dim(const softrod_venv* venv);
size_t softrod_observation_dim(const softrod_venv* venv);
/* Actions are bounded by [-1, 1] componentwise; fills action_dim entries. */
int softrod_action_bounds(const softrod_venv* venv, double* low, double* high);

/* obs: num_envs x observation_dim. */
int softrod_reset(softrod_venv* venv, double* obs);
/* obs: observation_dim. */
int softrod_reset_env(softrod_venv* venv, size_t index, uint64_t seed, double* obs);
/* actions: num_envs x action_dim; obs: num_envs x observation_dim; rewards,
 * terminated, truncated: num_envs; infos may be NULL. */
int softrod_step(softrod_venv* venv, const double* actions, double* obs,
                 double* rewards, uint8_t* terminated, uint8_t* truncated,
                 softrod_step_info* infos);

const char* softrod_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* SOFTROD_C_API_H */
