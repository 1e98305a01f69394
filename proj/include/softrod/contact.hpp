#pragma once

// Rod-vs-rigid-obstacle contact: detection, the smooth squared-softplus
// potential used by the implicit stepper, and the gated penalty force used
// by the explicit baseline.

#include <span>
#include <vector>

#include "softrod/banded.hpp"
#include "softrod/geometry.hpp"

namespace softrod {

/// Rigid sphere or capsule. A sphere is stored as a capsule with
/// coincident endpoints.
struct Obstacle {
  enum class Kind { sphere, capsule };

  Kind kind = Kind::sphere;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;

  static Obstacle sphere(const Vec3& center, double radius);
  static Obstacle capsule(const Vec3& endpoint_a, const Vec3& endpoint_b,
                          double radius);

  /// Throws InvalidParameterError.
  void validate() const;
};

/// One rod edge near one obstacle. `gap` is the surface distance (center
/// distance minus both radii): positive when separated, negative when
/// penetrating. `normal` points from the obstacle toward the rod.
struct ContactPair {
  std::size_t edge_index = 0;
  std::size_t obstacle_index = 0;
  double rod_param = 0.0;
  double obstacle_param = 0.0;
  double gap = 0.0;
  Vec3 normal = Vec3::UnitZ();
};

struct ContactConfig {
  double stiffness = 1e6;  // k
  double delta = 0.005;    // distance tolerance (m)
  double damping = 10.0;   // N s/m, penalty model only

  double sharpness() const { return 15.0 / delta; }  // K = 15 / delta
  void validate() const;
};

/// Closest points between segment [p0, p1] and segment [q0, q1] (q0 == q1
/// for a point). Parameters lie in [0, 1].
struct SegmentClosest {
  double s = 0.0;  // on p
  double t = 0.0;  // on q
  double distance = 0.0;
};
SegmentClosest closest_segment_segment(const Vec3& p0, const Vec3& p1,
                                       const Vec3& q0, const Vec3& q1);

/// Every edge/obstacle pair with gap < cutoff, ordered by (edge, obstacle).
std::vector<ContactPair> detect(const RodState& state, double rod_radius,
                                std::span<const Obstacle> obstacles,
                                double cutoff);

struct ContactEnergy {
  double energy = 0.0;
  VecX gradient;
  BandedMatrix hessian;
};

/// Per-pair energy k * (softplus(-K gap) / K)^2 and its derivatives with
/// respect to the gap.
struct ImcScalar {
  double energy;
  double d_gap;
  double d2_gap;
};
ImcScalar imc_pair_energy(double gap, const ContactConfig& config);

/// Smooth contact energy summed over pairs, with gradient and Hessian over
/// the 4N-1 DOFs (theta entries zero). Pairs must come from `detect` on the
/// same state.
ContactEnergy imc_force(std::span<const ContactPair> pairs, const RodState& state,
                        double rod_radius, std::span<const Obstacle> obstacles,
                        const ContactConfig& config, bool with_hessian = true);

/// Accumulating variant for the stepper; returns the energy. With
/// `project_hessian` every pair block has its negative eigenvalues clamped
/// to zero.
double accumulate_imc(std::span<const ContactPair> pairs, const RodState& state,
                      double rod_radius, std::span<const Obstacle> obstacles,
                      const ContactConfig& config, VecX* gradient,
                      BandedMatrix* hessian, bool project_hessian = false);

/// Penalty force on penetrating pairs: (-F_perp + k p + d) along the
/// normal, where p = -gap, F_perp is the component of `other_forces` at the
/// contact point pressing into the surface and d = -c * (normal velocity).
/// Returns a 4N-1 force vector (theta entries zero).
VecX penalty_force(std::span<const ContactPair> pairs, const RodState& state,
                   const ContactConfig& config, const VecX& other_forces);

/// Largest penetration depth (-gap) over the pairs, 0 if none penetrate.
double max_penetration(std::span<const ContactPair> pairs);

}  // namespace softrod
