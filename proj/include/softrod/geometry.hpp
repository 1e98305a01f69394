#pragma once

// Discrete centerline: DOF layout, tangents, reference and material frames,
// and discrete curvature measures.

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace softrod {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;

/// Edges shorter than this are rejected as degenerate.
inline constexpr double kDegenerateEdgeLength = 1e-12;
/// Tangent pairs with t_a . t_b below -1 + this are treated as antiparallel.
inline constexpr double kAntiparallelTolerance = 1e-9;

/// Index of node i's x coordinate in the interleaved DOF vector
/// [q0, theta0, q1, ..., theta_{N-2}, q_{N-1}].
constexpr std::size_t node_dof(std::size_t node) { return 4 * node; }
/// Index of edge j's twist angle in the interleaved DOF vector.
constexpr std::size_t theta_dof(std::size_t edge) { return 4 * edge + 3; }
constexpr std::size_t dof_count(std::size_t nodes) { return 4 * nodes - 1; }

/// Configuration and velocity of one rod.
struct RodState {
  std::vector<Vec3> positions;      // N nodes (m)
  std::vector<double> thetas;       // N-1 edge angles (rad)
  std::vector<Vec3> velocities;     // N nodes (m/s)
  std::vector<double> theta_rates;  // N-1 (rad/s)

  std::size_t num_nodes() const { return positions.size(); }
  std::size_t num_edges() const { return thetas.size(); }
  std::size_t num_dofs() const { return dof_count(num_nodes()); }

  /// Throws InvalidParameterError on wrong sizes or non-finite entries.
  void validate() const;

  VecX pack_positions() const;
  VecX pack_velocities() const;
  void unpack_positions(const VecX& q);
  void unpack_velocities(const VecX& v);
};

/// Per-edge reference frames {d1, d2, t}, material frames {m1, m2, t} and
/// the reference twist at each interior node.
struct FrameSet {
  std::vector<Vec3> ref_d1;
  std::vector<Vec3> ref_d2;
  std::vector<Vec3> tangents;
  std::vector<Vec3> mat_m1;
  std::vector<Vec3> mat_m2;
  std::vector<double> ref_twists;  // N-2, indexed by interior node i-1
};

/// Rest-state quantities and material constants.
struct RestConfig {
  std::vector<double> rest_lengths;     // N-1
  std::vector<double> voronoi_lengths;  // N-2
  std::vector<Vec2> nat_curvature;      // N-2
  std::vector<double> nat_twist;        // N-2
  double stretch_stiffness = 0.0;       // K_s = EA (N)
  double bend_stiffness = 0.0;          // K_b = EI (N m^2)
  double twist_stiffness = 0.0;         // K_t = GJ (N m^2)
  std::vector<double> lumped_masses;    // N
  std::vector<double> theta_inertias;   // N-1
  double radius = 0.0;                  // cross-section radius (m)
};

struct RodParams {
  double length = 1.0;
  double radius = 0.05;
  double density = 1000.0;
  double youngs = 1e7;
  double poisson = 0.5;
  std::size_t n_nodes = 21;
};

struct Rod {
  RodState state;
  RestConfig rest;
  FrameSet frames;
};

/// Straight rod along +x from the origin, at rest, with theta = 0.
Rod build_rod(const RodParams& params);

/// Unit edge tangents. Throws DegenerateEdgeError.
std::vector<Vec3> compute_tangents(const RodState& state);

/// Minimal rotation taking unit vector `from` to unit vector `to`, applied
/// to `u`. Throws AntiparallelTangentError when from ~ -to.
Vec3 parallel_transport(const Vec3& u, const Vec3& from, const Vec3& to);

/// Signed angle from u to v about `axis` (u, v orthogonal to axis).
double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis);

/// Rotates u about unit `axis` by `angle` (Rodrigues).
Vec3 rotate_about(const Vec3& u, const Vec3& axis, double angle);

/// Reference frames built by space-parallel transport from a deterministic
/// first-edge frame; reference twists are zero by construction.
FrameSet initial_frames(const RodState& state);

/// Moves the reference frames to new tangents by minimal rotation of each
/// edge's previous frame and updates the reference twists so that they
/// accumulate continuously across calls. Material frames are rebuilt from
/// `thetas`.
FrameSet time_parallel_transport(const FrameSet& prev,
                                 std::span<const Vec3> new_tangents,
                                 std::span<const double> thetas);

/// Rebuilds m1, m2 from the reference frames and edge angles in place.
void update_material_frames(FrameSet& frames, std::span<const double> thetas);

/// (kappa b)_i = 2 t^{i-1} x t^i / (1 + t^{i-1} . t^i), one per interior node.
std::vector<Vec3> curvature_binormals(std::span<const Vec3> tangents);

/// kappa_i = [kb . (m2^{i-1} + m2^i) / 2, kb . (m1^{i-1} + m1^i) / 2].
std::vector<Vec2> material_curvatures(const RodState& state,
                                      const FrameSet& frames);

/// Integrated twists psi_i = theta^i - theta^{i-1} + beta^i.
std::vector<double> integrated_twists(const RodState& state,
                                      const FrameSet& frames);

}  // namespace softrod
