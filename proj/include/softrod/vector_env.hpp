#pragma once

// A batch of independent environments stepped in lockstep. The OpenMP path
// and the serial reference produce bit-identical results.

#include <cstdint>
#include <span>
#include <vector>

#include "softrod/envs.hpp"

namespace softrod {

/// Worker count after applying the SOFTROD_THREADS cap (if set) and the
/// batch size. `requested` <= 0 means "all available".
int effective_workers(int requested, std::size_t num_envs);

class VectorEnv {
 public:
  /// Env i is reset with seed base_seed + i.
  VectorEnv(const TaskSpec& spec, const SimConfig& config, std::size_t num_envs,
            std::uint64_t base_seed, int workers = 0);

  std::size_t size() const { return envs_.size(); }
  std::size_t action_dim() const { return envs_.front().action_dim(); }
  std::size_t observation_dim() const { return envs_.front().observation_dim(); }
  int workers() const { return workers_; }
  void set_workers(int workers);

  /// Resets every env (seed base_seed + i) and returns the observations.
  std::vector<std::vector<double>> reset();
  /// Resets a single env with an explicit seed.
  std::vector<double> reset_env(std::size_t index, std::uint64_t seed);

  /// `actions` is row-major, size() x action_dim(). Envs whose episode
  /// ended are not stepped; their result carries terminated/truncated from
  /// the final step and an explanatory message. Solver failures stay
  /// inside their env's result.
  std::vector<StepResult> step(std::span<const double> actions);
  /// Same contract, one env after another on the calling thread.
  std::vector<StepResult> step_serial(std::span<const double> actions);

  Environment& env(std::size_t i) { return envs_[i]; }
  const Environment& env(std::size_t i) const { return envs_[i]; }

 private:
  StepResult step_one(std::size_t i, std::span<const double> actions);
  void check_actions(std::span<const double> actions) const;

  std::vector<Environment> envs_;
  std::uint64_t base_seed_;
  int workers_;
};

}  // namespace softrod
