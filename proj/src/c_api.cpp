#include "softrod/c_api.h"

#include <algorithm>
#include <memory>
#include <string>

#include "softrod/config.hpp"
#include "softrod/errors.hpp"
#include "softrod/vector_env.hpp"

struct softrod_venv {
  std::unique_ptr<softrod::VectorEnv> env;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
int guarded(F&& f) {
  try {
    f();
    return SOFTROD_OK;
  } catch (const softrod::ConfigError& e) {
    return fail(SOFTROD_ERR_CONFIG, e.what());
  } catch (const softrod::DimensionMismatchError& e) {
    return fail(SOFTROD_ERR_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SOFTROD_ERR_RUNTIME, e.what());
  }
}

void copy_obs(const std::vector<double>& src, double* dst) {
  std::copy(src.begin(), src.end(), dst);
}

}  // namespace

extern "C" {

int softrod_create(const char* task, const char* config_path, size_t num_envs,
                   uint64_t seed, int workers, softrod_venv** out) {
  if (!out) return fail(SOFTROD_ERR_ARGUMENT, "null output handle");
  *out = nullptr;
  if (num_envs == 0) return fail(SOFTROD_ERR_ARGUMENT, "num_envs must be positive");
  softrod::Task task_override{};
  if (task) {
    try {
      task_override = softrod::parse_task(task);
    } catch (const std::exception& e) {
      return fail(SOFTROD_ERR_ARGUMENT, e.what());
    }
  }
  return guarded([&] {
    softrod::RunConfig cfg = config_path ? softrod::load_config(config_path)
                                         : softrod::RunConfig{};
    if (task) cfg.task = task_override;
    softrod::TaskSpec spec;
    spec.task = cfg.task;
    spec.scheme = cfg.scheme;
    auto handle = std::make_unique<softrod_venv>();
    handle->env =
        std::make_unique<softrod::VectorEnv>(spec, cfg.sim, num_envs, seed, workers);
    *out = handle.release();
  });
}

void softrod_destroy(softrod_venv* venv) { delete venv; }

size_t softrod_num_envs(const softrod_venv* venv) { return venv ? venv->env->size() : 0; }

size_t softrod_action_dim(const softrod_venv* venv) {
  return venv ? venv->env->action_dim() : 0;
}

size_t softrod_observation_dim(const softrod_venv* venv) {
  return venv ? venv->env->observation_dim() : 0;
}

int softrod_action_bounds(const softrod_venv* venv, double* low, double* high) {
  if (!venv || !low || !high) return fail(SOFTROD_ERR_ARGUMENT, "null argument");
  std::fill_n(low, venv->env->action_dim(), -1.0);
  std::fill_n(high, venv->env->action_dim(), 1.0);
  return SOFTROD_OK;
}

int softrod_reset(softrod_venv* venv, double* obs) {
  if (!venv || !obs) return fail(SOFTROD_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto all = venv->env->reset();
    const std::size_t dim = venv->env->observation_dim();
    for (std::size_t i = 0; i < all.size(); ++i) copy_obs(all[i], obs + i * dim);
  });
}

int softrod_reset_env(softrod_venv* venv, size_t index, uint64_t seed, double* obs) {
  if (!venv || !obs) return fail(SOFTROD_ERR_ARGUMENT, "null argument");
  if (index >= venv->env->size()) return fail(SOFTROD_ERR_ARGUMENT, "env index out of range");
  return guarded([&] { copy_obs(venv->env->reset_env(index, seed), obs); });
}

int softrod_step(softrod_venv* venv, const double* actions, double* obs,
                 double* rewards, uint8_t* terminated, uint8_t* truncated,
                 softrod_step_info* infos) {
  if (!venv || !actions || !obs || !rewards || !terminated || !truncated) {
    return fail(SOFTROD_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    softrod::VectorEnv& v = *venv->env;
    const auto results = v.step({actions, v.size() * v.action_dim()});
    const std::size_t dim = v.observation_dim();
    for (std::size_t i = 0; i < results.size(); ++i) {
      const softrod::StepResult& r = results[i];
      copy_obs(r.observation, obs + i * dim);
      rewards[i] = r.reward;
      terminated[i] = r.terminated ? 1 : 0;
      truncated[i] = r.truncated ? 1 : 0;
      if (infos) {
        softrod_step_info& info = infos[i];
        info.newton_iterations = r.info.newton_iterations;
        info.solver_failure = r.info.solver_failure ? 1 : 0;
        info.success = r.info.success ? 1 : 0;
        info.action_clipped = r.info.action_clipped ? 1 : 0;
        info.residual = r.info.residual;
        info.max_penetration = r.info.max_penetration;
        info.distance = r.info.distance;
        info.yaw_error = r.info.yaw_error;
      }
    }
  });
}

const char* softrod_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
