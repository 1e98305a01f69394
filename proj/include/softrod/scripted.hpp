#pragma once

// Model-based scripted policies and action-sequence files.

#include <filesystem>
#include <span>
#include <vector>

#include "softrod/envs.hpp"

namespace softrod {

struct ScriptedOptions {
  double probe = 0.5;        // action magnitude of each Jacobian probe
  double damping = 1e-4;     // damped least-squares regularization (m^2)
  double max_action = 1.0;   // clip magnitude
};

/// One control step of damped least squares: probes copies of `env` with
/// each unit action, linearizes the post-step tip position and returns the
/// action that moves the tip toward `goal`. `env` is not modified.
std::vector<double> scripted_action(const Environment& env, const Vec3& goal,
                                    const ScriptedOptions& options = {});

/// Whitespace-separated numbers, one action per line; '#' starts a comment.
/// Throws Error on unreadable files or ragged rows.
std::vector<std::vector<double>> load_actions(const std::filesystem::path& path);
void save_actions(const std::filesystem::path& path,
                  const std::vector<std::vector<double>>& actions,
                  const std::string& header = "");

/// Scripted run of the tight-gap task: steers the tip onto the target with
/// the rod kept threaded through the slot. Returns the action sequence (ends at success or at the
/// episode limit).
std::vector<std::vector<double>> script_tight_gap(const TaskSpec& spec,
                                                  const SimConfig& config,
                                                  std::uint64_t seed);

}  // namespace softrod
