#pragma once

// Delta natural curvature / twist actuation. An action moves the rest
// curvature (and optionally rest twist) at C control points; each delta is
// smoothed over the control point's Voronoi region and ramped linearly over
// the simulation substeps of one control step.

#include <span>
#include <vector>

#include "softrod/geometry.hpp"

namespace softrod {

enum class ControlMode { bend2d, bend3d, bend3d_twist };

struct ControlConfig {
  std::size_t n_control_points = 5;
  ControlMode mode = ControlMode::bend3d;
  double delta_limit = 0.1;  // max |delta| per control step, per control point
  double kappa_bound = 2.0;  // clamp on every accumulated rest component
  int control_period = 2;    // simulation substeps per control step

  std::size_t action_dim() const;
  void validate() const;
};

/// Rest-shape targets for the current and previous control step.
struct ActuationState {
  std::vector<Vec2> kappa_target;  // N-2
  std::vector<Vec2> kappa_prev;
  std::vector<double> twist_target;  // N-2
  std::vector<double> twist_prev;
  int substep = 0;

  static ActuationState zero(std::size_t n_nodes);
};

/// Interior node index (1..N-2) of each control point: C roughly equidistant
/// picks, index 1 + round((k + 0.5) (N - 2) / C - 0.5).
std::vector<std::size_t> control_point_nodes(std::size_t n_nodes,
                                             std::size_t n_control_points);

/// weights[k][i]: share of control point k's delta received by interior
/// node i + 1. Each row sums to one. Nodes equidistant from two control
/// points are split evenly between them.
std::vector<std::vector<double>> voronoi_weights(std::size_t n_nodes,
                                                 std::size_t n_control_points);

/// Applies one action (blocked layout: kappa_1 for every control point,
/// then kappa_2, then twist, as the mode requires). Components outside
/// [-1, 1] are clipped; returns true when that happened. Throws
/// DimensionMismatchError or InvalidParameterError (non-finite entry).
bool apply_action(std::span<const double> action, ActuationState& actuation,
                  const ControlConfig& config);

/// Rest targets for substep `substep` of the current control step:
/// prev + (substep + 1) / control_period * (target - prev). Throws
/// InvalidParameterError when substep is outside [0, control_period).
void interp_targets(const ActuationState& actuation, int substep,
                    int control_period, std::vector<Vec2>& kappa_bar,
                    std::vector<double>& twist_bar);

/// Convenience overload writing straight into a rest configuration.
void interp_targets(const ActuationState& actuation, int substep,
                    int control_period, RestConfig& rest);

}  // namespace softrod
