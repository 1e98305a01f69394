#include <gtest/gtest.h>

#include <random>

#include "softrod/dynamics.hpp"
#include "softrod/envs.hpp"
#include "softrod/errors.hpp"

using namespace softrod;

namespace {

StepperConfig no_gravity(double dt) {
  StepperConfig sc;
  sc.dt = dt;
  sc.gravity.setZero();
  return sc;
}

double max_displacement(const RodState& a, const RodState& b) {
  return (a.pack_positions() - b.pack_positions()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(ImplicitStepper, RestRodIsFixedPoint) {
  Rod rod = build_rod({});
  const RodState start = rod.state;
  ImplicitStepper stepper(no_gravity(0.05), ClampSpec::cantilever(rod.state));
  for (int k = 0; k < 20; ++k) {
    const StepStats st = stepper.step(rod, {}, {});
    EXPECT_EQ(st.newton_iterations, 0);
    EXPECT_LT(max_displacement(rod.state, start), 1e-12);
  }
}

TEST(ExplicitStepper, RestRodIsFixedPoint) {
  Rod rod = build_rod({});
  const RodState start = rod.state;
  ExplicitStepper stepper(no_gravity(2e-4), ClampSpec::cantilever(rod.state));
  for (int k = 0; k < 1000; ++k) stepper.step(rod, {}, {});
  EXPECT_LT(max_displacement(rod.state, start), 1e-12);
}

TEST(ClampSpec, CantileverHoldsFirstTwoNodesAndFirstAngle) {
  const Rod rod = build_rod({});
  const ClampSpec c = ClampSpec::cantilever(rod.state);
  const std::vector<std::size_t> expect{0, 1, 2, 3, 4, 5, 6};
  EXPECT_EQ(c.dofs(), expect);
}

TEST(Steppers, CantileverSteadyStatesAgree) {
  // Heavier damping than the default only shortens the settling time; the
  // static equilibrium does not depend on it.
  StepperConfig imp;
  imp.damping_coeff = 2.0;
  StepperConfig exp = imp;
  exp.dt = 2e-4;
  Rod a = build_rod({});
  Rod b = a;
  ImplicitStepper si(imp, ClampSpec::cantilever(a.state));
  ExplicitStepper se(exp, ClampSpec::cantilever(b.state));
  for (int k = 0; k < 400; ++k) si.step(a, {}, {});
  for (int k = 0; k < 100000; ++k) se.step(b, {}, {});
  const Vec3 ta = a.state.positions.back();
  const Vec3 tb = b.state.positions.back();
  EXPECT_LT(ta.z(), -0.1);  // visibly deflected
  EXPECT_LT((ta - tb).norm(), 0.01);
}

TEST(ImplicitStepper, SteadyHoldNeedsAtMostTwoIterations) {
  TaskSpec spec;
  SimConfig cfg;
  cfg.newton_iters_noncontact = 20;
  Environment env(spec, cfg);
  env.reset(1);
  const std::vector<double> zero(env.action_dim(), 0.0);
  for (int k = 0; k < 100; ++k) {
    const StepResult r = env.step(zero);
    if (k >= 20) {
      EXPECT_LE(r.info.max_newton_iterations, 2) << k;
      EXPECT_TRUE(r.info.converged);
    }
  }
}

TEST(ImplicitStepper, TrackingUnderIterationCapStaysAccurate) {
  // Small random actions with the default two-iteration cap against a run
  // that iterates to convergence.
  TaskSpec spec;
  SimConfig full;
  full.newton_iters_noncontact = 30;
  Environment capped(spec, SimConfig{});
  Environment converged(spec, full);
  capped.reset(1);
  converged.reset(1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> a(capped.action_dim());
    for (double& x : a) x = u(rng);
    const StepResult r = capped.step(a);
    EXPECT_LE(r.info.max_newton_iterations, 2);
    EXPECT_FALSE(r.info.solver_failure);
    EXPECT_TRUE(converged.step(a).info.converged);
    worst = std::max(worst, (capped.tip() - converged.tip()).norm());
  }
  EXPECT_LT(worst, 0.01);
}

TEST(ImplicitStepper, LargeStepsStayStable) {
  Rod rod = build_rod({});
  for (std::size_t i = 2; i < rod.state.num_nodes(); ++i) rod.state.velocities[i] = Vec3(0, 0, 5.0);
  StepperConfig sc;
  sc.dt = 0.5;
  sc.max_newton_iters = 5;
  ImplicitStepper stepper(sc, ClampSpec::cantilever(rod.state));
  for (int k = 0; k < 50; ++k) stepper.step(rod, {}, {});
  EXPECT_TRUE(rod.state.pack_positions().allFinite());
  EXPECT_LT(rod.state.positions.back().norm(), 1.01);
}

TEST(ExplicitStepper, EnergyConservedWithoutDamping) {
  Rod rod = build_rod({});
  for (std::size_t i = 2; i < rod.state.num_nodes(); ++i) {
    rod.state.velocities[i] = Vec3(0.0, 0.0, 0.5 * static_cast<double>(i) / 20.0);
  }
  StepperConfig sc = no_gravity(2e-5);
  sc.damping_coeff = 0.0;
  ExplicitStepper stepper(sc, ClampSpec::cantilever(rod.state));
  const double e0 = total_energy(rod, sc.gravity);
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    stepper.step(rod, {}, {});
    drift = std::max(drift, std::abs(total_energy(rod, sc.gravity) - e0));
  }
  EXPECT_LT(drift / e0, 0.01);
}

TEST(ExplicitStepper, LargeStepDiverges) {
  Rod rod = build_rod({});
  StepperConfig sc;
  sc.dt = 0.05;
  ExplicitStepper stepper(sc, ClampSpec::cantilever(rod.state));
  auto run = [&] {
    for (int k = 0; k < 100; ++k) stepper.step(rod, {}, {});
  };
  EXPECT_THROW(run(), InstabilityError);
}

TEST(StepperConfig, RejectsInvalid) {
  StepperConfig sc;
  sc.dt = 0.0;
  EXPECT_THROW(sc.validate(), InvalidParameterError);
  sc = {};
  sc.max_newton_iters = 0;
  EXPECT_THROW(sc.validate(), InvalidParameterError);
}

TEST(ImplicitStepper, DeterministicAcrossRuns) {
  auto run = [] {
    TaskSpec spec;
    spec.task = Task::obstacles3d_random;
    Environment env(spec, SimConfig{});
    env.reset(5);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    while (!env.done()) {
      std::vector<double> a(env.action_dim());
      for (double& x : a) x = u(rng);
      env.step(a);
    }
    return env.rod().state.pack_positions();
  };
  EXPECT_EQ(run(), run());
}

TEST(ImplicitStepper, ContactPenetrationStaysBelowTolerance) {
  TaskSpec spec;
  spec.task = Task::obstacles3d_random;
  SimConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Environment env(spec, cfg);
    env.reset(seed);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(-1, 1);
    while (!env.done()) {
      std::vector<double> a(env.action_dim());
      for (double& x : a) x = u(rng);
      const StepResult r = env.step(a);
      EXPECT_FALSE(r.info.solver_failure);
      EXPECT_LE(r.info.max_penetration, cfg.imc_delta);
    }
  }
}
