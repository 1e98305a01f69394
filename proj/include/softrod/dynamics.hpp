#pragma once

// Time integration: backward Euler with a capped Newton loop on banded
// systems, and a symplectic Euler baseline with penalty contact.

#include <span>
#include <vector>

#include "softrod/banded.hpp"
#include "softrod/contact.hpp"
#include "softrod/elasticity.hpp"
#include "softrod/geometry.hpp"

namespace softrod {

enum class Scheme { implicit, explicit_euler };

struct StepperConfig {
  double dt = 0.05;
  int max_newton_iters = 2;
  double newton_tol = 1e-6;      // on the infinity norm of the force residual (N)
  double damping_coeff = 0.1;    // c_d in C = c_d M (1/s)
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  bool line_search = true;       // backtracking on |r|, factor 0.5, 8 halvings
  bool project_hessian = false;  // per-stencil PSD projection

  void validate() const;
};

/// Fixed nodes and edge angles. Clamped DOFs are held at their targets and
/// removed from the solve.
struct ClampSpec {
  std::vector<std::size_t> nodes;
  std::vector<Vec3> node_targets;
  std::vector<std::size_t> edges;
  std::vector<double> theta_targets;

  /// Nodes 0 and 1 and edge angle 0 at their current values.
  static ClampSpec cantilever(const RodState& state);
  /// Interleaved DOF indices, ascending.
  std::vector<std::size_t> dofs() const;
  void apply(RodState& state) const;
};

struct StepStats {
  int newton_iterations = 0;
  double residual = 0.0;  // infinity norm at the accepted state
  bool converged = true;
  double max_penetration = 0.0;
  std::size_t contact_pairs = 0;
};

/// Backward Euler on
///   r(q) = M (q - q_t - dt v_t) / dt^2 + grad E(q) - F_g + C (q - q_t) / dt.
/// Owns its Newton workspace; one instance per rod, not reentrant.
class ImplicitStepper {
 public:
  ImplicitStepper() = default;
  ImplicitStepper(const StepperConfig& config, ClampSpec clamp);

  /// Advances `rod` by one step of config().dt. Hitting the iteration cap is
  /// not an error; the residual is reported in the stats. Throws
  /// StepFailureError on a singular system, non-finite iterate or a frame
  /// transport failure.
  StepStats step(Rod& rod, std::span<const Obstacle> obstacles,
                 const ContactConfig& contact);

  const StepperConfig& config() const { return config_; }
  StepperConfig& config() { return config_; }
  const ClampSpec& clamp() const { return clamp_; }

 private:
  double residual(const Rod& rod, const FrameSet& frames, const RodState& trial,
                  std::span<const Obstacle> obstacles, const ContactConfig& contact,
                  bool with_hessian, double* penetration, std::size_t* npairs);
  void ensure_workspace(const Rod& rod);

  StepperConfig config_;
  ClampSpec clamp_;
  std::vector<std::size_t> clamp_dofs_;
  VecX mass_, q_t_, v_t_, q_, r_, grad_, force_g_;
  BandedMatrix jac_;
  BandedLDLT ldlt_;
  BandedLU lu_;
  std::vector<ContactPair> pairs_;
};

/// Symplectic Euler: v += dt M^-1 F(q, v); q += dt v, with the penalty
/// contact force. Throws InstabilityError on a non-finite or runaway DOF.
class ExplicitStepper {
 public:
  ExplicitStepper() = default;
  ExplicitStepper(const StepperConfig& config, ClampSpec clamp);

  StepStats step(Rod& rod, std::span<const Obstacle> obstacles,
                 const ContactConfig& contact);

  const StepperConfig& config() const { return config_; }
  StepperConfig& config() { return config_; }

  /// Magnitude beyond which a DOF or its rate counts as diverged.
  static constexpr double kRunaway = 1e6;

 private:
  StepperConfig config_;
  ClampSpec clamp_;
  std::vector<std::size_t> clamp_dofs_;
  VecX mass_, force_, q_, v_;
  std::vector<ContactPair> pairs_;
};

/// Lumped mass/inertia diagonal over the 4N-1 DOFs.
VecX mass_vector(const RestConfig& rest);

/// Kinetic + elastic + gravitational potential energy (height measured
/// along -gravity).
double total_energy(const Rod& rod, const Vec3& gravity);

}  // namespace softrod
