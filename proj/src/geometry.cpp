#include "softrod/geometry.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <string>

#include "softrod/errors.hpp"

namespace softrod {

namespace {

bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

void RodState::validate() const {
  const std::size_t n = positions.size();
  if (n < 3) {
    throw InvalidParameterError("rod needs at least 3 nodes, got " +
                                std::to_string(n));
  }
  if (velocities.size() != n || thetas.size() != n - 1 ||
      theta_rates.size() != n - 1) {
    throw InvalidParameterError("rod state arrays have inconsistent sizes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!all_finite(positions[i]) || !all_finite(velocities[i])) {
      throw InvalidParameterError("non-finite node entry at node " +
                                  std::to_string(i));
    }
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (!std::isfinite(thetas[j]) || !std::isfinite(theta_rates[j])) {
      throw InvalidParameterError("non-finite edge entry at edge " +
                                  std::to_string(j));
    }
  }
}

VecX RodState::pack_positions() const {
  VecX q(num_dofs());
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    q.segment<3>(node_dof(i)) = positions[i];
  }
  for (std::size_t j = 0; j < num_edges(); ++j) q[theta_dof(j)] = thetas[j];
  return q;
}

VecX RodState::pack_velocities() const {
  VecX v(num_dofs());
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    v.segment<3>(node_dof(i)) = velocities[i];
  }
  for (std::size_t j = 0; j < num_edges(); ++j) {
    v[theta_dof(j)] = theta_rates[j];
  }
  return v;
}

void RodState::unpack_positions(const VecX& q) {
  if (static_cast<std::size_t>(q.size()) != num_dofs()) {
    throw DimensionMismatchError(num_dofs(), q.size());
  }
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    positions[i] = q.segment<3>(node_dof(i));
  }
  for (std::size_t j = 0; j < num_edges(); ++j) thetas[j] = q[theta_dof(j)];
}

void RodState::unpack_velocities(const VecX& v) {
  if (static_cast<std::size_t>(v.size()) != num_dofs()) {
    throw DimensionMismatchError(num_dofs(), v.size());
  }
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    velocities[i] = v.segment<3>(node_dof(i));
  }
  for (std::size_t j = 0; j < num_edges(); ++j) {
    theta_rates[j] = v[theta_dof(j)];
  }
}

Rod build_rod(const RodParams& p) {
  if (p.n_nodes < 3) {
    throw InvalidParameterError("n_nodes must be >= 3");
  }
  if (!(p.length > 0) || !(p.radius > 0) || !(p.density > 0) ||
      !(p.youngs > 0)) {
    throw InvalidParameterError(
        "length, radius, density and Young's modulus must be positive");
  }
  if (!(p.poisson >= 0.0) || !(p.poisson < 0.5 + 1e-9)) {
    throw InvalidParameterError("Poisson's ratio must lie in [0, 0.5]");
  }

  const std::size_t n = p.n_nodes;
  Rod rod;
  RodState& s = rod.state;
  s.positions.resize(n);
  s.velocities.assign(n, Vec3::Zero());
  s.thetas.assign(n - 1, 0.0);
  s.theta_rates.assign(n - 1, 0.0);
  const double spacing = p.length / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    s.positions[i] = Vec3(spacing * static_cast<double>(i), 0.0, 0.0);
  }

  const double pi = std::numbers::pi;
  const double area = pi * p.radius * p.radius;
  const double r4 = p.radius * p.radius * p.radius * p.radius;
  const double inertia = pi * r4 / 4.0;
  const double polar = pi * r4 / 2.0;
  const double shear_modulus = p.youngs / (2.0 * (1.0 + p.poisson));

  RestConfig& r = rod.rest;
  r.radius = p.radius;
  r.stretch_stiffness = p.youngs * area;
  r.bend_stiffness = p.youngs * inertia;
  r.twist_stiffness = shear_modulus * polar;
  r.rest_lengths.resize(n - 1);
  // Rest lengths are measured from the actual node coordinates so that the
  // initial configuration carries exactly zero strain.
  for (std::size_t j = 0; j + 1 < n; ++j) {
    r.rest_lengths[j] = (s.positions[j + 1] - s.positions[j]).norm();
  }
  r.voronoi_lengths.resize(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    r.voronoi_lengths[i - 1] = 0.5 * (r.rest_lengths[i - 1] + r.rest_lengths[i]);
  }
  r.nat_curvature.assign(n - 2, Vec2::Zero());
  r.nat_twist.assign(n - 2, 0.0);
  r.lumped_masses.assign(n, 0.0);
  r.theta_inertias.resize(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double edge_mass = p.density * area * r.rest_lengths[j];
    r.lumped_masses[j] += 0.5 * edge_mass;
    r.lumped_masses[j + 1] += 0.5 * edge_mass;
    r.theta_inertias[j] = p.density * polar * r.rest_lengths[j];
  }

  rod.frames = initial_frames(s);
  return rod;
}

std::vector<Vec3> compute_tangents(const RodState& state) {
  std::vector<Vec3> t(state.num_edges());
  for (std::size_t j = 0; j < t.size(); ++j) {
    const Vec3 e = state.positions[j + 1] - state.positions[j];
    const double len = e.norm();
    if (!(len > kDegenerateEdgeLength)) throw DegenerateEdgeError(j, len);
    t[j] = e / len;
  }
  return t;
}

Vec3 parallel_transport(const Vec3& u, const Vec3& from, const Vec3& to) {
  const double c = from.dot(to);
  if (c < -1.0 + kAntiparallelTolerance) {
    throw AntiparallelTangentError("parallel transport between antiparallel tangents");
  }
  const Vec3 n = from.cross(to);
  return c * u + n.cross(u) + n * (n.dot(u) / (1.0 + c));
}

double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis) {
  return std::atan2(u.cross(v).dot(axis), u.dot(v));
}

Vec3 rotate_about(const Vec3& u, const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * u + s * axis.cross(u) + (1.0 - c) * axis.dot(u) * axis;
}

FrameSet initial_frames(const RodState& state) {
  FrameSet f;
  f.tangents = compute_tangents(state);
  const std::size_t m = f.tangents.size();
  f.ref_d1.resize(m);
  f.ref_d2.resize(m);

  const Vec3& t0 = f.tangents[0];
  Vec3 d1 = t0.cross(Vec3::UnitY());
  if (d1.norm() < 1e-8) {
    d1 = Vec3::UnitZ();
  }
  d1 = (d1 - d1.dot(t0) * t0).normalized();
  f.ref_d1[0] = d1;
  f.ref_d2[0] = t0.cross(d1);
  for (std::size_t j = 1; j < m; ++j) {
    Vec3 d = parallel_transport(f.ref_d1[j - 1], f.tangents[j - 1], f.tangents[j]);
    d = (d - d.dot(f.tangents[j]) * f.tangents[j]).normalized();
    f.ref_d1[j] = d;
    f.ref_d2[j] = f.tangents[j].cross(d);
  }
  f.ref_twists.assign(m - 1, 0.0);
  update_material_frames(f, state.thetas);
  return f;
}

void update_material_frames(FrameSet& f, std::span<const double> thetas) {
  const std::size_t m = f.tangents.size();
  if (thetas.size() != m) throw DimensionMismatchError(m, thetas.size());
  f.mat_m1.resize(m);
  f.mat_m2.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double c = std::cos(thetas[j]);
    const double s = std::sin(thetas[j]);
    f.mat_m1[j] = c * f.ref_d1[j] + s * f.ref_d2[j];
    f.mat_m2[j] = -s * f.ref_d1[j] + c * f.ref_d2[j];
  }
}

FrameSet time_parallel_transport(const FrameSet& prev,
                                 std::span<const Vec3> new_tangents,
                                 std::span<const double> thetas) {
  const std::size_t m = prev.tangents.size();
  if (new_tangents.size() != m) {
    throw DimensionMismatchError(m, new_tangents.size());
  }
  FrameSet f;
  f.tangents.assign(new_tangents.begin(), new_tangents.end());
  f.ref_d1.resize(m);
  f.ref_d2.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vec3& t = f.tangents[j];
    Vec3 d = parallel_transport(prev.ref_d1[j], prev.tangents[j], t);
    d = (d - d.dot(t) * t).normalized();
    f.ref_d1[j] = d;
    f.ref_d2[j] = t.cross(d);
  }
  f.ref_twists.resize(m - 1);
  for (std::size_t i = 1; i < m; ++i) {
    const double old_twist = prev.ref_twists[i - 1];
    Vec3 u = parallel_transport(f.ref_d1[i - 1], f.tangents[i - 1], f.tangents[i]);
    u = rotate_about(u, f.tangents[i], old_twist);
    f.ref_twists[i - 1] = old_twist + signed_angle(u, f.ref_d1[i], f.tangents[i]);
  }
  update_material_frames(f, thetas);
  return f;
}

std::vector<Vec3> curvature_binormals(std::span<const Vec3> tangents) {
  std::vector<Vec3> kb(tangents.size() > 0 ? tangents.size() - 1 : 0);
  for (std::size_t i = 1; i < tangents.size(); ++i) {
    const double chi = 1.0 + tangents[i - 1].dot(tangents[i]);
    if (chi < kAntiparallelTolerance) {
      throw AntiparallelTangentError("antiparallel tangents at interior node " +
                                     std::to_string(i));
    }
    kb[i - 1] = 2.0 * tangents[i - 1].cross(tangents[i]) / chi;
  }
  return kb;
}

std::vector<Vec2> material_curvatures(const RodState& state,
                                      const FrameSet& frames) {
  (void)state;
  const std::vector<Vec3> kb = curvature_binormals(frames.tangents);
  std::vector<Vec2> kappa(kb.size());
  for (std::size_t i = 1; i <= kb.size(); ++i) {
    const Vec3& b = kb[i - 1];
    kappa[i - 1] = Vec2(0.5 * b.dot(frames.mat_m2[i - 1] + frames.mat_m2[i]),
                        0.5 * b.dot(frames.mat_m1[i - 1] + frames.mat_m1[i]));
  }
  return kappa;
}

std::vector<double> integrated_twists(const RodState& state,
                                      const FrameSet& frames) {
  std::vector<double> psi(frames.ref_twists.size());
  for (std::size_t i = 1; i <= psi.size(); ++i) {
    psi[i - 1] = state.thetas[i] - state.thetas[i - 1] + frames.ref_twists[i - 1];
  }
  return psi;
}

}  // namespace softrod
