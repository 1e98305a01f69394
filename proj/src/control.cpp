#include "softrod/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "softrod/errors.hpp"

namespace softrod {

std::size_t ControlConfig::action_dim() const {
  switch (mode) {
    case ControlMode::bend2d:
      return n_control_points;
    case ControlMode::bend3d:
      return 2 * n_control_points;
    case ControlMode::bend3d_twist:
      return 3 * n_control_points;
  }
  return 0;
}

void ControlConfig::validate() const {
  if (n_control_points < 1) throw InvalidParameterError("need at least one control point");
  if (!(delta_limit > 0.0)) throw InvalidParameterError("delta_limit must be positive");
  if (!(kappa_bound > 0.0)) throw InvalidParameterError("kappa_bound must be positive");
  if (control_period < 1) throw InvalidParameterError("control_period must be >= 1");
}

ActuationState ActuationState::zero(std::size_t n_nodes) {
  ActuationState a;
  a.kappa_target.assign(n_nodes - 2, Vec2::Zero());
  a.kappa_prev = a.kappa_target;
  a.twist_target.assign(n_nodes - 2, 0.0);
  a.twist_prev = a.twist_target;
  return a;
}

std::vector<std::size_t> control_point_nodes(std::size_t n_nodes,
                                             std::size_t n_control_points) {
  const std::size_t interior = n_nodes - 2;
  if (n_nodes < 3 || n_control_points < 1 || n_control_points > interior) {
    throw InvalidParameterError("control points must fit on the interior nodes");
  }
  std::vector<std::size_t> out(n_control_points);
  for (std::size_t k = 0; k < n_control_points; ++k) {
    const double x = (static_cast<double>(k) + 0.5) * static_cast<double>(interior) /
                         static_cast<double>(n_control_points) -
                     0.5;
    out[k] = 1 + static_cast<std::size_t>(std::lround(x));
  }
  return out;
}

std::vector<std::vector<double>> voronoi_weights(std::size_t n_nodes,
                                                 std::size_t n_control_points) {
  const std::vector<std::size_t> cps = control_point_nodes(n_nodes, n_control_points);
  const std::size_t interior = n_nodes - 2;
  const std::size_t c = cps.size();

  // Membership of every interior node in each region (ties split).
  std::vector<std::vector<double>> member(c, std::vector<double>(interior, 0.0));
  for (std::size_t i = 0; i < interior; ++i) {
    const std::size_t node = i + 1;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t d = node > cps[k] ? node - cps[k] : cps[k] - node;
      best = std::min(best, d);
    }
    std::vector<std::size_t> owners;
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t d = node > cps[k] ? node - cps[k] : cps[k] - node;
      if (d == best) owners.push_back(k);
    }
    for (std::size_t k : owners) member[k][i] = 1.0 / static_cast<double>(owners.size());
  }

  // Triangular profile peaking at the control point and reaching zero one
  // node past the region's far end.
  std::vector<std::vector<double>> w(c, std::vector<double>(interior, 0.0));
  for (std::size_t k = 0; k < c; ++k) {
    double reach = 0.0;
    for (std::size_t i = 0; i < interior; ++i) {
      if (member[k][i] > 0.0) {
        reach = std::max(reach, std::abs(static_cast<double>(i + 1) -
                                         static_cast<double>(cps[k])));
      }
    }
    reach += 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < interior; ++i) {
      const double dist = std::abs(static_cast<double>(i + 1) - static_cast<double>(cps[k]));
      w[k][i] = member[k][i] * std::max(0.0, 1.0 - dist / reach);
      sum += w[k][i];
    }
    for (double& x : w[k]) x /= sum;
  }
  return w;
}

bool apply_action(std::span<const double> action, ActuationState& actuation,
                  const ControlConfig& config) {
  if (action.size() != config.action_dim()) {
    throw DimensionMismatchError(config.action_dim(), action.size());
  }
  const std::size_t interior = actuation.kappa_target.size();
  const std::size_t n_nodes = interior + 2;
  const std::size_t c = config.n_control_points;
  const auto weights = voronoi_weights(n_nodes, c);

  bool clipped = false;
  auto component = [&](std::size_t idx) {
    const double a = action[idx];
    if (!std::isfinite(a)) throw InvalidParameterError("non-finite action component");
    if (a > 1.0 || a < -1.0) clipped = true;
    return std::clamp(a, -1.0, 1.0) * config.delta_limit;
  };

  actuation.kappa_prev = actuation.kappa_target;
  actuation.twist_prev = actuation.twist_target;
  actuation.substep = 0;

  const double bound = config.kappa_bound;
  for (std::size_t k = 0; k < c; ++k) {
    const double d1 = component(k);
    const double d2 = config.mode == ControlMode::bend2d ? 0.0 : component(c + k);
    const double dt = config.mode == ControlMode::bend3d_twist ? component(2 * c + k) : 0.0;
    for (std::size_t i = 0; i < interior; ++i) {
      const double w = weights[k][i];
      if (w == 0.0) continue;
      actuation.kappa_target[i] += w * Vec2(d1, d2);
      actuation.twist_target[i] += w * dt;
    }
  }
  for (std::size_t i = 0; i < interior; ++i) {
    actuation.kappa_target[i] = actuation.kappa_target[i].cwiseMax(-bound).cwiseMin(bound);
    actuation.twist_target[i] = std::clamp(actuation.twist_target[i], -bound, bound);
  }
  return clipped;
}

void interp_targets(const ActuationState& actuation, int substep,
                    int control_period, std::vector<Vec2>& kappa_bar,
                    std::vector<double>& twist_bar) {
  if (control_period < 1 || substep < 0 || substep >= control_period) {
    throw InvalidParameterError("substep " + std::to_string(substep) +
                                " outside control period " +
                                std::to_string(control_period));
  }
  const std::size_t interior = actuation.kappa_target.size();
  kappa_bar.resize(interior);
  twist_bar.resize(interior);
  if (substep == control_period - 1) {
    kappa_bar = actuation.kappa_target;
    twist_bar = actuation.twist_target;
    return;
  }
  const double s = static_cast<double>(substep + 1) / static_cast<double>(control_period);
  for (std::size_t i = 0; i < interior; ++i) {
    kappa_bar[i] = actuation.kappa_prev[i] +
                   s * (actuation.kappa_target[i] - actuation.kappa_prev[i]);
    twist_bar[i] = actuation.twist_prev[i] +
                   s * (actuation.twist_target[i] - actuation.twist_prev[i]);
  }
}

void interp_targets(const ActuationState& actuation, int substep,
                    int control_period, RestConfig& rest) {
  interp_targets(actuation, substep, control_period, rest.nat_curvature, rest.nat_twist);
}

}  // namespace softrod
