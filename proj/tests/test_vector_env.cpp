#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <thread>

#include "softrod/errors.hpp"
#include "softrod/vector_env.hpp"

using namespace softrod;

namespace {

std::vector<double> random_actions(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> a(n);
  for (double& x : a) x = u(rng);
  return a;
}

TaskSpec contact_spec() {
  TaskSpec s;
  s.task = Task::obstacles3d_random;
  s.episode_length = 8;
  return s;
}

}  // namespace

TEST(VectorEnv, SingleEnvMatchesEnvironment) {
  TaskSpec spec;
  spec.episode_length = 10;
  VectorEnv venv(spec, SimConfig{}, 1, 7, 1);
  Environment env(spec, SimConfig{});
  EXPECT_EQ(venv.reset().front(), env.reset(7));
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const auto a = random_actions(rng, env.action_dim());
    const StepResult expect = env.step(a);
    const StepResult got = venv.step(a).front();
    EXPECT_EQ(got.observation, expect.observation);
    EXPECT_EQ(got.reward, expect.reward);
    EXPECT_EQ(got.terminated, expect.terminated);
    EXPECT_EQ(got.truncated, expect.truncated);
  }
}

TEST(VectorEnv, EnvIUsesSeedBasePlusI) {
  VectorEnv venv(contact_spec(), SimConfig{}, 4, 100, 1);
  const auto obs = venv.reset();
  for (std::size_t i = 0; i < 4; ++i) {
    Environment env(contact_spec(), SimConfig{});
    EXPECT_EQ(obs[i], env.reset(100 + i));
  }
}

TEST(VectorEnv, WorkerCountDoesNotChangeResults) {
  auto run = [](int workers) {
    VectorEnv venv(contact_spec(), SimConfig{}, 8, 3, workers);
    venv.reset();
    std::mt19937_64 rng(11);
    std::vector<std::vector<double>> trace;
    for (int k = 0; k < 8; ++k) {
      for (const StepResult& r : venv.step(random_actions(rng, 8 * venv.action_dim()))) {
        trace.push_back(r.observation);
        trace.back().push_back(r.reward);
      }
    }
    return trace;
  };
  EXPECT_EQ(run(1), run(8));
}

TEST(VectorEnv, SerialReferenceMatchesParallel) {
  VectorEnv a(contact_spec(), SimConfig{}, 6, 0, 4);
  VectorEnv b(contact_spec(), SimConfig{}, 6, 0, 4);
  a.reset();
  b.reset();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 8; ++k) {
    const auto actions = random_actions(rng, 6 * a.action_dim());
    const auto ra = a.step(actions);
    const auto rb = b.step_serial(actions);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      EXPECT_EQ(ra[i].observation, rb[i].observation);
      EXPECT_EQ(ra[i].reward, rb[i].reward);
    }
  }
}

TEST(VectorEnv, FinishedEnvsAreNotStepped) {
  TaskSpec spec;
  spec.episode_length = 2;
  VectorEnv venv(spec, SimConfig{}, 2, 0, 1);
  venv.reset();
  const std::vector<double> zero(2 * venv.action_dim(), 0.0);
  venv.step(zero);
  const auto last = venv.step(zero);
  EXPECT_TRUE(last[0].truncated);
  const auto after = venv.step(zero);
  EXPECT_TRUE(after[0].truncated);
  EXPECT_FALSE(after[0].info.message.empty());
  EXPECT_EQ(venv.env(0).control_step(), 2);
  venv.reset_env(0, 9);
  EXPECT_FALSE(venv.env(0).done());
}

TEST(VectorEnv, WrongActionShapeThrows) {
  VectorEnv venv(TaskSpec{}, SimConfig{}, 3, 0, 1);
  venv.reset();
  EXPECT_THROW(venv.step(std::vector<double>(10, 0.0)), DimensionMismatchError);
}

TEST(VectorEnv, EffectiveWorkersRespectsBatchSize) {
  EXPECT_EQ(effective_workers(16, 4), 4);
  EXPECT_EQ(effective_workers(2, 4), 2);
  EXPECT_GE(effective_workers(0, 64), 1);
}

TEST(VectorEnv, SixtyFourEnvsScaleWithCores) {
  const unsigned cores = std::thread::hardware_concurrency();
  if (cores < 8) GTEST_SKIP() << "needs at least 8 cores, found " << cores;
  TaskSpec spec;
  spec.episode_length = 1000;
  auto time_it = [&](int workers) {
    VectorEnv venv(spec, SimConfig{}, 64, 0, workers);
    venv.reset();
    const std::vector<double> a(64 * venv.action_dim(), 0.05);
    venv.step(a);
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 5; ++k) venv.step(a);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double serial = time_it(1);
  const double parallel = time_it(8);
  EXPECT_GT(serial / parallel, 3.0);
}
