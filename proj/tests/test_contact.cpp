#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "softrod/contact.hpp"
#include "softrod/dynamics.hpp"
#include "softrod/errors.hpp"
#include "softrod/validate.hpp"

using namespace softrod;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

double point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

// Dense sampling along the rod segment, then ternary refinement around the
// best sample (the distance is convex along the segment).
double sampled_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const int samples = 10000;
  int best = 0;
  double best_d = 1e300;
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    const double d = point_segment(p0 + s * (p1 - p0), q0, q1);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = std::max(0.0, (best - 1.0) / samples);
  double hi = std::min(1.0, (best + 1.0) / samples);
  for (int it = 0; it < 100; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if (point_segment(p0 + a * (p1 - p0), q0, q1) < point_segment(p0 + b * (p1 - p0), q0, q1)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return std::min(best_d, point_segment(p0 + 0.5 * (lo + hi) * (p1 - p0), q0, q1));
}

RodState two_node_rod(const Vec3& a, const Vec3& b) {
  RodState s;
  s.positions = {a, 0.5 * (a + b), b};
  s.velocities.assign(3, Vec3::Zero());
  s.thetas.assign(2, 0.0);
  s.theta_rates.assign(2, 0.0);
  return s;
}

}  // namespace

TEST(Detect, FarObstacleGivesNoPairs) {
  const Rod rod = build_rod({});
  const std::vector<Obstacle> obs{Obstacle::sphere(Vec3(0.5, 0.0, 1.0), 0.1)};
  EXPECT_TRUE(detect(rod.state, 0.05, obs, 0.02).empty());
}

TEST(Detect, TouchingSphereHasZeroGap) {
  const Rod rod = build_rod({});
  // Midpoint of edge 10 is (0.525, 0, 0); offset perpendicular by r_rod + r_obs.
  const std::vector<Obstacle> obs{Obstacle::sphere(Vec3(0.525, 0.0, 0.05 + 0.1), 0.1)};
  const auto pairs = detect(rod.state, 0.05, obs, 1e-9);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].edge_index, 10u);
  EXPECT_NEAR(pairs[0].gap, 0.0, 1e-12);
  EXPECT_NEAR(pairs[0].rod_param, 0.5, 1e-12);
  EXPECT_NEAR((pairs[0].normal + Vec3::UnitZ()).norm(), 0.0, 1e-12);
}

TEST(Detect, GapsMatchSamplingOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vec3 p0(u(rng), u(rng), u(rng));
    const Vec3 p1 = p0 + 0.05 * random_unit(rng);
    const Vec3 c(u(rng), u(rng), u(rng));
    const Vec3 axis = random_unit(rng) * (0.01 + std::abs(u(rng)));
    const Obstacle obs = Obstacle::capsule(c - axis, c + axis, 0.02);
    const RodState s = two_node_rod(p0, p1);
    const auto pairs = detect(s, 0.01, std::vector<Obstacle>{obs}, 10.0);
    for (const ContactPair& pair : pairs) {
      const Vec3 a = s.positions[pair.edge_index];
      const Vec3 b = s.positions[pair.edge_index + 1];
      const double oracle = sampled_distance(a, b, obs.a, obs.b) - 0.01 - 0.02;
      worst = std::max(worst, std::abs(pair.gap - oracle));
    }
    EXPECT_EQ(pairs.size(), 2u);
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Detect, InvariantUnderRigidTransform) {
  std::mt19937_64 rng(8);
  const Rod rod = random_rod(4);
  std::vector<Obstacle> obs{Obstacle::capsule(Vec3(0.3, 0.1, 0.12), Vec3(0.5, -0.1, 0.1), 0.05),
                            Obstacle::sphere(Vec3(0.8, 0.0, -0.1), 0.04)};
  const auto before = detect(rod.state, 0.05, obs, 0.2);
  ASSERT_FALSE(before.empty());
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(1.1, random_unit(rng)).toRotationMatrix();
  const Vec3 shift(1.0, 2.0, -3.0);
  RodState moved = rod.state;
  for (Vec3& x : moved.positions) x = rot * x + shift;
  for (Obstacle& o : obs) {
    o.a = rot * o.a + shift;
    o.b = rot * o.b + shift;
  }
  const auto after = detect(moved, 0.05, obs, 0.2);
  ASSERT_EQ(after.size(), before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_NEAR(after[i].gap, before[i].gap, 1e-9);
    EXPECT_NEAR((after[i].normal - rot * before[i].normal).norm(), 0.0, 1e-9);
  }
}

TEST(ClosestSegment, ParallelAndPointCases) {
  const auto par = closest_segment_segment(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                                           Vec3(1, 1, 0));
  EXPECT_NEAR(par.distance, 1.0, 1e-15);
  const auto pt = closest_segment_segment(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 1, 0),
                                          Vec3(2, 1, 0));
  EXPECT_NEAR(pt.distance, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(pt.s, 1.0);
}

TEST(Obstacle, RejectsInvalid) {
  EXPECT_THROW(Obstacle::sphere(Vec3::Zero(), -1.0).validate(), InvalidParameterError);
  ContactConfig c;
  c.delta = 0.0;
  EXPECT_THROW(c.validate(), InvalidParameterError);
}

TEST(ImcEnergy, VanishesFarFromContact) {
  const ContactConfig c;
  const ImcScalar e = imc_pair_energy(10.0 * c.delta, c);
  EXPECT_LT(e.energy, 1e-30 * c.stiffness);
  EXPECT_GE(e.energy, 0.0);
}

TEST(ImcEnergy, ValueAtZeroGap) {
  const ContactConfig c;
  EXPECT_DOUBLE_EQ(c.sharpness(), 3000.0);
  const double inner = std::log(2.0) / 3000.0;
  EXPECT_NEAR(imc_pair_energy(0.0, c).energy, c.stiffness * inner * inner, 1e-15);
}

TEST(ImcEnergy, StrictlyDecreasingInGap) {
  const ContactConfig c;
  double prev = imc_pair_energy(-0.02, c).energy;
  for (double g = -0.02 + 1e-4; g < 0.01; g += 1e-4) {
    const double e = imc_pair_energy(g, c).energy;
    EXPECT_LT(e, prev) << g;
    EXPECT_LT(imc_pair_energy(g, c).d_gap, 0.0);
    prev = e;
  }
}

TEST(ImcEnergy, SmoothAcrossZeroGap) {
  const ContactConfig c;
  const double h = 1e-9;
  for (double g : {-1e-3, -1e-6, 0.0, 1e-6, 1e-3}) {
    const ImcScalar e = imc_pair_energy(g, c);
    const double fd = (imc_pair_energy(g + h, c).energy - imc_pair_energy(g - h, c).energy) / (2 * h);
    EXPECT_NEAR(fd, e.d_gap, 1e-5 * std::abs(e.d_gap));
    const double fd2 = (imc_pair_energy(g + h, c).d_gap - imc_pair_energy(g - h, c).d_gap) / (2 * h);
    EXPECT_NEAR(fd2, e.d2_gap, 1e-5 * std::abs(e.d2_gap));
  }
  EXPECT_NEAR(imc_pair_energy(-1e-14, c).d_gap, imc_pair_energy(1e-14, c).d_gap,
              1e-6 * std::abs(imc_pair_energy(0.0, c).d_gap));
}

TEST(ImcForce, GradientMatchesCentralDifferences) {
  const ContactConfig c;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-7;
  for (int k = 0; k < 20; ++k) {
    Rod rod = random_rod(rng());
    const Vec3 p = rod.state.positions[10];
    const double gap = 0.004 * u(rng);  // straddles gap = 0
    const std::vector<Obstacle> obs{
        Obstacle::sphere(p + Vec3(0.0, 0.0, 0.05 + 0.06 + gap), 0.06)};
    const auto energy_at = [&](const VecX& q) {
      RodState s = rod.state;
      s.unpack_positions(q);
      return imc_force(detect(s, 0.05, obs, 1.0), s, 0.05, obs, c, false).energy;
    };
    const auto pairs = detect(rod.state, 0.05, obs, 1.0);
    const ContactEnergy e = imc_force(pairs, rod.state, 0.05, obs, c, true);
    const VecX q = rod.state.pack_positions();
    VecX fd = VecX::Zero(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      VecX qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      fd[i] = (energy_at(qp) - energy_at(qm)) / (2 * h);
    }
    const double scale = e.gradient.cwiseAbs().maxCoeff();
    EXPECT_LT((fd - e.gradient).cwiseAbs().maxCoeff() / scale, 1e-5);
    EXPECT_LT(e.hessian.asymmetry(), 1e-9);
  }
}

TEST(PenaltyForce, ZeroWithoutPenetration) {
  const Rod rod = build_rod({});
  ContactPair pair;
  pair.edge_index = 3;
  pair.gap = 0.0;
  const VecX f = penalty_force(std::vector<ContactPair>{pair}, rod.state, ContactConfig{},
                               VecX::Zero(rod.state.num_dofs()));
  EXPECT_EQ(f.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PenaltyForce, LinearSpringWhenStatic) {
  const Rod rod = build_rod({});
  ContactConfig c;
  c.stiffness = 1.6e5;
  ContactPair pair;
  pair.edge_index = 3;
  pair.rod_param = 0.25;
  pair.gap = -0.002;
  pair.normal = Vec3(0.0, 0.6, 0.8);
  const VecX f = penalty_force(std::vector<ContactPair>{pair}, rod.state, c,
                               VecX::Zero(rod.state.num_dofs()));
  const Vec3 total = f.segment<3>(node_dof(3)) + f.segment<3>(node_dof(4));
  EXPECT_NEAR((total - 1.6e5 * 0.002 * pair.normal).norm(), 0.0, 1e-9);
  EXPECT_NEAR((f.segment<3>(node_dof(3)) - 0.75 * total).norm(), 0.0, 1e-9);
}

TEST(PenaltyForce, RestingRodBalancesWeight) {
  // Free rod dropped onto a nearly flat support (a capsule of radius 100
  // whose top is at z = 0); after settling, the time-averaged normal force
  // equals the rod's weight.
  RodParams p;
  Rod rod = build_rod(p);
  for (Vec3& x : rod.state.positions) x.z() += 0.05 + 0.002;
  StepperConfig sc;
  sc.dt = 2e-4;
  sc.damping_coeff = 5.0;  // settles the bending modes; drops out of the balance
  ExplicitStepper stepper(sc, ClampSpec{});
  ContactConfig c;
  c.stiffness = 1.6e5;
  const std::vector<Obstacle> obs{
      Obstacle::capsule(Vec3(-1.0, 0.0, -100.0), Vec3(2.0, 0.0, -100.0), 100.0)};
  const VecX mass = mass_vector(rod.rest);
  double weight = 0.0;
  for (double m : rod.rest.lumped_masses) weight += m * 9.81;

  double normal_sum = 0.0;
  const int settle = 15000, window = 5000;
  for (int k = 0; k < settle + window; ++k) {
    if (k >= settle) {
      // Same force assembly as the stepper, evaluated before the step.
      VecX other = VecX::Zero(rod.state.num_dofs());
      accumulate_elastic(rod.state, rod.frames, rod.rest, {}, &other, nullptr);
      other = -other - sc.damping_coeff * mass.cwiseProduct(rod.state.pack_velocities());
      for (std::size_t i = 0; i < rod.state.num_nodes(); ++i) {
        other.segment<3>(node_dof(i)) += rod.rest.lumped_masses[i] * sc.gravity;
      }
      const auto pairs = detect(rod.state, rod.rest.radius, obs, 0.0);
      const VecX f = penalty_force(pairs, rod.state, c, other);
      for (std::size_t i = 0; i < rod.state.num_nodes(); ++i) normal_sum += f[node_dof(i) + 2];
    }
    stepper.step(rod, obs, c);
  }
  EXPECT_NEAR(normal_sum / window, weight, 0.02 * weight);
}
