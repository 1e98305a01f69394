#pragma once

// Library side of the command-line subcommands, kept separate from argument
// parsing so the tests can drive them directly.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "softrod/config.hpp"

namespace softrod {

// ------------------------------------------------------------------ bench

struct BenchOptions {
  std::vector<std::size_t> env_counts = {1, 8};
  std::vector<Task> tasks = {Task::follow_target, Task::obstacles3d_random};
  int steps = 20;  // timed vector steps per row
};

struct BenchRow {
  Scheme scheme = Scheme::implicit;
  Task task = Task::follow_target;
  std::size_t envs = 1;
  double ms_per_vector_step = 0.0;
  double speedup_vs_explicit = 1.0;  // simulated seconds per wall second
  int substeps_per_control_step = 0;
};

std::vector<BenchRow> run_bench(const RunConfig& config, const BenchOptions& options);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

// ---------------------------------------------------------------- rollout

struct Policy {
  enum class Kind { zero, random, file };
  Kind kind = Kind::zero;
  std::vector<std::vector<double>> actions;  // file policies only
  std::string source;

  /// "zero", "random" or a path to an action file.
  static Policy parse(const std::string& spec);
};

/// Action for `control_step` of an episode. Random policies draw from `rng`;
/// file policies repeat zero actions after the last row.
std::vector<double> policy_action(const Policy& policy, std::size_t action_dim,
                                  int control_step, std::mt19937_64& rng);
/// Per-episode generator seed of the random policy.
std::uint64_t policy_seed(std::uint64_t episode_seed);

struct EpisodeSummary {
  int episode = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double discounted_return = 0.0;
  double total_reward = 0.0;
  double final_distance = 0.0;
  double max_penetration = 0.0;
  bool success = false;
  bool solver_failure = false;
};

/// Runs config.episodes episodes, config.envs at a time. Episode e uses
/// seed config.seed + e; records are written episode by episode.
std::vector<EpisodeSummary> run_rollout(const RunConfig& config, const Policy& policy,
                                        std::ostream* trajectory);

// ---------------------------------------------------------------- compare

struct CompareOptions {
  double settle_time = 100.0;  // s of simulated time for the cantilever
  int contact_episodes = 5;
  Task contact_task = Task::obstacles3d_random;
};

struct SchemeStats {
  double discounted_return = 0.0;
  double max_penetration = 0.0;
  double mean_penetration = 0.0;  // mean over control steps of the step maximum
  bool unstable = false;
  std::string message;
};

struct CompareReport {
  double length = 1.0;
  Vec3 cantilever_implicit = Vec3::Zero();
  Vec3 cantilever_explicit = Vec3::Zero();
  double cantilever_difference = 0.0;  // m
  bool cantilever_explicit_stable = true;

  Task tracking_task = Task::follow_target;
  SchemeStats tracking_implicit;
  SchemeStats tracking_explicit;
  double return_relative_difference = 0.0;
  double tip_rms_divergence = 0.0;  // m

  Task contact_task = Task::obstacles3d_random;
  SchemeStats contact_implicit;
  SchemeStats contact_explicit;
};

/// Open-loop action used by the tracking comparison.
std::vector<double> sinusoid_action(std::size_t action_dim, int control_step);

CompareReport run_compare(const RunConfig& config, const CompareOptions& options);
void write_compare_report(std::ostream& out, const CompareReport& report);

}  // namespace softrod
