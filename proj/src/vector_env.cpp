#include "softrod/vector_env.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>

#include "softrod/errors.hpp"

namespace softrod {

int effective_workers(int requested, std::size_t num_envs) {
  int n = requested > 0 ? requested : omp_get_max_threads();
  if (const char* cap = std::getenv("SOFTROD_THREADS")) {
    const int c = std::atoi(cap);
    if (c > 0) n = std::min(n, c);
  }
  n = std::min<int>(n, static_cast<int>(std::max<std::size_t>(num_envs, 1)));
  return std::max(n, 1);
}

VectorEnv::VectorEnv(const TaskSpec& spec, const SimConfig& config,
                     std::size_t num_envs, std::uint64_t base_seed, int workers)
    : base_seed_(base_seed) {
  if (num_envs == 0) throw InvalidParameterError("a vector env needs at least one env");
  envs_.reserve(num_envs);
  for (std::size_t i = 0; i < num_envs; ++i) envs_.emplace_back(spec, config);
  workers_ = effective_workers(workers, num_envs);
  reset();
}

void VectorEnv::set_workers(int workers) { workers_ = effective_workers(workers, envs_.size()); }

std::vector<std::vector<double>> VectorEnv::reset() {
  std::vector<std::vector<double>> obs(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) obs[i] = envs_[i].reset(base_seed_ + i);
  return obs;
}

std::vector<double> VectorEnv::reset_env(std::size_t index, std::uint64_t seed) {
  return envs_.at(index).reset(seed);
}

void VectorEnv::check_actions(std::span<const double> actions) const {
  const std::size_t expected = envs_.size() * action_dim();
  if (actions.size() != expected) throw DimensionMismatchError(expected, actions.size());
}

StepResult VectorEnv::step_one(std::size_t i, std::span<const double> actions) {
  Environment& e = envs_[i];
  if (e.done()) {
    StepResult r;
    r.observation = e.observation();
    r.truncated = true;
    r.info.message = "episode already ended";
    return r;
  }
  return e.step(actions.subspan(i * action_dim(), action_dim()));
}

std::vector<StepResult> VectorEnv::step(std::span<const double> actions) {
  check_actions(actions);
  const std::size_t n = envs_.size();
  std::vector<StepResult> results(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for num_threads(workers_) schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      results[i] = step_one(i, actions);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<StepResult> VectorEnv::step_serial(std::span<const double> actions) {
  check_actions(actions);
  std::vector<StepResult> results(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) results[i] = step_one(i, actions);
  return results;
}

}  // namespace softrod
