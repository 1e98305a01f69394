#pragma once

// Line-delimited JSON trajectory export: one object per control step with
// the fields t, node_positions, kappa_bar, action, reward and info.

#include <ostream>
#include <span>
#include <string>

#include "softrod/envs.hpp"

namespace softrod {

/// Serializes one control step of `env` (state after the step) as a single
/// JSON line without the trailing newline. `episode` is stored in info.
std::string trajectory_record(const Environment& env, std::span<const double> action,
                              const StepResult& result, int episode);

class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(out) {}
  void write(const Environment& env, std::span<const double> action,
             const StepResult& result, int episode = 0);
  std::size_t records() const { return records_; }

 private:
  std::ostream& out_;
  std::size_t records_ = 0;
};

/// Sum of gamma^t r_t over the given rewards.
double discounted_return(std::span<const double> rewards, double gamma);

}  // namespace softrod
