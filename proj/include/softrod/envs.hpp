#pragma once

// The four manipulation tasks: a clamped rod driven by delta natural
// curvature/twist actions, stepped with either time integrator.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softrod/contact.hpp"
#include "softrod/control.hpp"
#include "softrod/dynamics.hpp"
#include "softrod/geometry.hpp"

namespace softrod {

enum class Task { follow_target, ik4d, obstacles2d_tight, obstacles3d_random };

std::string_view task_name(Task task);
/// Throws ConfigError on an unknown name.
Task parse_task(std::string_view name);
std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);

bool is_contact_task(Task task);
ControlMode task_control_mode(Task task);

/// Every physical and task parameter. Defaults reproduce the reference
/// setup.
struct SimConfig {
  RodParams rod;
  std::size_t n_control_points = 5;
  double delta_limit = 0.1;
  double kappa_bound = 2.0;

  double implicit_dt = 0.05;
  int implicit_period_noncontact = 2;
  int implicit_period_contact = 10;
  int newton_iters_noncontact = 2;
  int newton_iters_contact = 5;
  double newton_tol = 1e-6;
  double imc_stiffness = 1e6;
  double imc_delta = 0.005;

  double explicit_dt = 2e-4;
  int explicit_period_noncontact = 500;
  int explicit_period_contact = 2500;
  double penalty_stiffness = 1.6e5;
  double penalty_damping = 10.0;

  double damping_coeff = 0.1;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  bool line_search = true;
  bool project_hessian = false;

  int episode_length_noncontact = 100;
  int episode_length_contact = 40;
  double success_radius = 0.02;  // fraction of rod length
  double yaw_tolerance = 0.1;    // rad
  int success_hold = 3;          // consecutive control steps
  double success_bonus = 10.0;
  double failure_reward = -10.0;
  double target_speed = 0.5;     // m/s; 0 freezes the follow target
  double gamma = 0.99;

  void validate() const;
};

struct TaskSpec {
  Task task = Task::follow_target;
  Scheme scheme = Scheme::implicit;
  int episode_length = 0;  // 0 selects the task default
};

struct StepInfo {
  int newton_iterations = 0;      // summed over substeps
  int max_newton_iterations = 0;  // worst substep
  double residual = 0.0;          // worst accepted residual
  bool converged = true;          // every substep under newton_tol
  double max_penetration = 0.0;   // m, over substeps
  double distance = 0.0;          // tip to target (m)
  double yaw_error = 0.0;         // ik4d only (rad)
  bool success = false;
  bool solver_failure = false;
  bool action_clipped = false;
  std::string message;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

/// Smooth random path traversed at constant speed (Catmull-Rom through
/// waypoints, arc-length parametrized).
class TargetPath {
 public:
  TargetPath() = default;
  explicit TargetPath(std::vector<Vec3> waypoints);
  Vec3 position(double arc_length) const;
  Vec3 tangent(double arc_length) const;
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  const std::vector<Vec3>& waypoints() const { return points_; }

 private:
  Vec3 eval(std::size_t seg, double u) const;
  Vec3 deriv(std::size_t seg, double u) const;
  std::pair<std::size_t, double> locate(double s) const;

  std::vector<Vec3> points_;
  std::vector<double> cumulative_;  // arc length at every table sample
  std::vector<std::pair<std::size_t, double>> samples_;
};

class Environment {
 public:
  Environment(const TaskSpec& spec, const SimConfig& config);

  /// Restores the rod to rest and resamples the task scene from `seed`.
  std::vector<double> reset(std::uint64_t seed);
  /// Advances one control step. Throws DimensionMismatchError on a wrong
  /// action length and Error when the episode already ended.
  StepResult step(std::span<const double> action);

  std::size_t action_dim() const { return control_.action_dim(); }
  std::size_t observation_dim() const;
  std::vector<double> observation() const;

  const TaskSpec& spec() const { return spec_; }
  const SimConfig& config() const { return config_; }
  const Rod& rod() const { return rod_; }
  const ActuationState& actuation() const { return actuation_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  const ControlConfig& control() const { return control_; }
  int control_period() const { return control_.control_period; }
  double sim_dt() const;
  int episode_length() const { return episode_length_; }
  int control_step() const { return control_step_; }
  double time() const { return time_; }
  bool done() const { return done_; }

  Vec3 tip() const { return rod_.state.positions.back(); }
  /// Rotation of the tip material frame about the tip tangent relative to
  /// the base frame: wrap(sum of integrated twists).
  double tip_yaw() const;
  const Vec3& target() const { return target_; }
  Vec3 target_velocity() const;
  double target_yaw() const { return target_yaw_; }
  /// Overrides the current target (test and scripting hook).
  void set_target(const Vec3& position, double yaw = 0.0);

 private:
  void build_scene(std::mt19937_64& rng);
  void update_target();

  TaskSpec spec_;
  SimConfig config_;
  ControlConfig control_;
  ContactConfig contact_;
  Rod rest_rod_;
  Rod rod_;
  ActuationState actuation_;
  ImplicitStepper implicit_;
  ExplicitStepper explicit_;
  std::vector<Obstacle> obstacles_;
  TargetPath path_;
  Vec3 target_ = Vec3::Zero();
  double target_yaw_ = 0.0;
  int episode_length_ = 0;
  int control_step_ = 0;
  double time_ = 0.0;
  int hold_ = 0;
  bool done_ = false;
  bool target_overridden_ = false;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Samples a reachable point in front of the base: direction within 45
/// degrees of +x, distance in [0.6, 0.85] L.
Vec3 sample_workspace_point(std::mt19937_64& rng, double length);

/// Fixed scene of the tight-gap task: two capsules with axes along y that
/// the rest rod passes between; the target lies beyond and above the slot.
std::vector<Obstacle> tight_gap_obstacles(double length);
Vec3 tight_gap_target(double length);
/// Slot center the rod threads through.
Vec3 tight_gap_center(double length);
inline constexpr double kTightGapClearance = 0.12;

/// Eight contact-free random capsules inside the task's bounding box.
std::vector<Obstacle> random_obstacles(std::mt19937_64& rng, const RodParams& rod,
                                       const Vec3& target);
Vec3 random_obstacles_target(double length);

}  // namespace softrod
