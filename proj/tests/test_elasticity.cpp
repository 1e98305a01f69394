#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "softrod/elasticity.hpp"
#include "softrod/validate.hpp"

using namespace softrod;

namespace {

using TermFn = ElasticResult (*)(const RodState&, const FrameSet&, const RestConfig&, bool,
                                 const ElasticOptions&);

ElasticResult stretch_term(const RodState& s, const FrameSet&, const RestConfig& r, bool h,
                           const ElasticOptions& o) {
  return stretch_energy(s, r, h, o);
}

const TermFn kTerms[] = {stretch_term, bend_energy, twist_energy, total_elastic};

double energy_at(TermFn fn, const Rod& base, const VecX& q) {
  RodState s = base.state;
  s.unpack_positions(q);
  const FrameSet f = time_parallel_transport(base.frames, compute_tangents(s), s.thetas);
  return fn(s, f, base.rest, false, {}).energy;
}

VecX gradient_at(TermFn fn, const Rod& base, const VecX& q) {
  RodState s = base.state;
  s.unpack_positions(q);
  const FrameSet f = time_parallel_transport(base.frames, compute_tangents(s), s.thetas);
  return fn(s, f, base.rest, false, {}).gradient;
}

double rel_inf(const VecX& approx, const VecX& exact) {
  return (approx - exact).cwiseAbs().maxCoeff() / std::max(exact.cwiseAbs().maxCoeff(), 1e-8);
}

}  // namespace

TEST(StretchEnergy, ZeroAtRestLength) {
  const Rod rod = build_rod({});
  const ElasticResult e = stretch_energy(rod.state, rod.rest);
  EXPECT_EQ(e.energy, 0.0);
  EXPECT_EQ(e.gradient.cwiseAbs().maxCoeff(), 0.0);
}

TEST(StretchEnergy, SingleStretchedEdge) {
  RodParams p;
  p.n_nodes = 3;
  p.length = 0.1;
  Rod rod = build_rod(p);
  rod.rest.stretch_stiffness = 7.854e4;
  // Edge 1 stretched to 1.1 times its rest length 0.05.
  rod.state.positions[2] = rod.state.positions[1] + Vec3(0.055, 0.0, 0.0);
  const double e = stretch_energy(rod.state, rod.rest, false).energy;
  EXPECT_NEAR(e, 0.5 * 7.854e4 * 0.01 * 0.05, 1e-9);
  EXPECT_NEAR(e, 19.635, 1e-3);
}

TEST(BendEnergy, FlatRodWithNaturalCurvature) {
  Rod rod = build_rod({});
  EXPECT_EQ(bend_energy(rod.state, rod.frames, rod.rest).energy, 0.0);
  const double c = 0.3;
  rod.rest.nat_curvature[7] = Vec2(c, 0.0);
  const double v = rod.rest.voronoi_lengths[7];
  EXPECT_NEAR(bend_energy(rod.state, rod.frames, rod.rest).energy,
              0.5 * rod.rest.bend_stiffness * c * c / v, 1e-12);
}

TEST(TwistEnergy, ZeroWithoutTwistAndFromEdgeAngles) {
  Rod rod = build_rod({});
  EXPECT_EQ(twist_energy(rod.state, rod.frames, rod.rest).energy, 0.0);
  rod.state.thetas[4] = 0.1;
  for (std::size_t j = 5; j < rod.state.num_edges(); ++j) rod.state.thetas[j] = 0.3;
  update_material_frames(rod.frames, rod.state.thetas);
  const double v = rod.rest.voronoi_lengths[4];
  const double expect = 0.5 * rod.rest.twist_stiffness * (0.1 * 0.1 / rod.rest.voronoi_lengths[3] +
                                                        0.2 * 0.2 / v);
  EXPECT_NEAR(twist_energy(rod.state, rod.frames, rod.rest).energy, expect, 1e-12);
}

TEST(TotalElastic, RestConfigurationIsStressFree) {
  const Rod rod = build_rod({});
  const ElasticResult e = total_elastic(rod.state, rod.frames, rod.rest);
  EXPECT_EQ(e.energy, 0.0);
  EXPECT_EQ(e.gradient.cwiseAbs().maxCoeff(), 0.0);
}

TEST(TotalElastic, EqualsSumOfTerms) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Rod rod = random_rod(seed);
    const ElasticResult s = stretch_energy(rod.state, rod.rest);
    const ElasticResult b = bend_energy(rod.state, rod.frames, rod.rest);
    const ElasticResult t = twist_energy(rod.state, rod.frames, rod.rest);
    const ElasticResult all = total_elastic(rod.state, rod.frames, rod.rest);
    EXPECT_DOUBLE_EQ(all.energy, s.energy + b.energy + t.energy);
    EXPECT_LT((all.gradient - s.gradient - b.gradient - t.gradient).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ElasticGradient, MatchesCentralDifferences) {
  const double h = 1e-6;
  for (TermFn fn : kTerms) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Rod rod = random_rod(seed + 40);
      const VecX q = rod.state.pack_positions();
      VecX fd(q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        VecX qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        fd[i] = (energy_at(fn, rod, qp) - energy_at(fn, rod, qm)) / (2 * h);
      }
      worst = std::max(worst, rel_inf(fd, gradient_at(fn, rod, q)));
    }
    EXPECT_LT(worst, 1e-6);
  }
}

TEST(ElasticHessian, MatchesDifferencesOfGradient) {
  const double h = 1e-6;
  for (TermFn fn : kTerms) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Rod rod = random_rod(seed + 70);
      const ElasticResult e = fn(rod.state, rod.frames, rod.rest, true, {});
      const Eigen::MatrixXd dense = e.hessian.to_dense();
      const VecX q = rod.state.pack_positions();
      Eigen::MatrixXd fd(q.size(), q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        VecX qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        fd.col(i) = (gradient_at(fn, rod, qp) - gradient_at(fn, rod, qm)) / (2 * h);
      }
      // The gradient field uses frames transported from the base state, so
      // its Jacobian is only symmetric at the base point; compare the
      // symmetric part.
      const Eigen::MatrixXd sym = 0.5 * (fd + fd.transpose());
      const double scale = dense.cwiseAbs().maxCoeff();
      EXPECT_LT((sym - dense).cwiseAbs().maxCoeff() / scale, 1e-5);
      EXPECT_LT(e.hessian.asymmetry(), 1e-9);
      EXPECT_TRUE(e.gradient.allFinite());
    }
  }
}

TEST(ElasticHessian, BandedWithRodBandwidth) {
  const Rod rod = random_rod(3);
  const ElasticResult e = total_elastic(rod.state, rod.frames, rod.rest);
  EXPECT_EQ(e.hessian.half_bandwidth(), 10u);
  const Eigen::MatrixXd d = e.hessian.to_dense();
  // The bandwidth is tight: a bending stencil couples DOFs ten apart.
  double edge = 0.0;
  for (Eigen::Index i = 0; i + 10 < d.rows(); ++i) edge = std::max(edge, std::abs(d(i, i + 10)));
  EXPECT_GT(edge, 0.0);
}

TEST(ElasticHessian, ProjectionLeavesNoNegativeCurvature) {
  const Rod rod = random_rod(9);
  ElasticOptions opts;
  opts.project_hessian = true;
  const ElasticResult e = total_elastic(rod.state, rod.frames, rod.rest, true, opts);
  const Eigen::MatrixXd d = e.hessian.to_dense();
  const double lowest = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d).eigenvalues().minCoeff();
  EXPECT_GT(lowest, -1e-9 * d.cwiseAbs().maxCoeff());
}

TEST(ElasticEnergy, RigidMotionInvariance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Rod rod = random_rod(seed + 20);
    const double e0 = total_elastic(rod.state, rod.frames, rod.rest, false).energy;
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(0.7 + seed, Vec3(1.0, -2.0, 0.5).normalized()).toRotationMatrix();
    const Vec3 shift(0.3, -1.2, 2.0);
    Rod moved = rod;
    for (Vec3& x : moved.state.positions) x = rot * x + shift;
    FrameSet& f = moved.frames;
    for (auto* set : {&f.ref_d1, &f.ref_d2, &f.tangents, &f.mat_m1, &f.mat_m2}) {
      for (Vec3& v : *set) v = rot * v;
    }
    const double e1 = total_elastic(moved.state, moved.frames, moved.rest, false).energy;
    EXPECT_NEAR(e1, e0, 1e-9 * e0);
  }
}

TEST(ElasticEnergy, NonNegative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Rod rod = random_rod(seed);
    EXPECT_GE(stretch_energy(rod.state, rod.rest, false).energy, 0.0);
    EXPECT_GE(bend_energy(rod.state, rod.frames, rod.rest, false).energy, 0.0);
    EXPECT_GE(twist_energy(rod.state, rod.frames, rod.rest, false).energy, 0.0);
  }
}

TEST(CurvatureGradient, MatchesDifferencesOfMaterialCurvature) {
  const Rod rod = random_rod(5);
  const std::size_t i = 8;  // interior node between edges 7 and 8
  const auto& f = rod.frames;
  const Vec3 ea = rod.state.positions[i] - rod.state.positions[i - 1];
  const Vec3 eb = rod.state.positions[i + 1] - rod.state.positions[i];
  const auto grad = curvature_gradient(ea, eb, f.mat_m1[i - 1], f.mat_m2[i - 1], f.mat_m1[i],
                                       f.mat_m2[i]);
  // Perturb the free end of edge i: only the tip node of eb moves.
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    Rod plus = rod, minus = rod;
    plus.state.positions[i + 1][c] += h;
    minus.state.positions[i + 1][c] -= h;
    plus.frames = time_parallel_transport(rod.frames, compute_tangents(plus.state), rod.state.thetas);
    minus.frames =
        time_parallel_transport(rod.frames, compute_tangents(minus.state), rod.state.thetas);
    const Vec2 kp = material_curvatures(plus.state, plus.frames)[i - 1];
    const Vec2 km = material_curvatures(minus.state, minus.frames)[i - 1];
    const Vec2 fd = (kp - km) / (2 * h);
    EXPECT_NEAR(grad(0, 3 + c), fd.x(), 1e-6);
    EXPECT_NEAR(grad(1, 3 + c), fd.y(), 1e-6);
  }
}
