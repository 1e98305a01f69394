#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "softrod/trajectory.hpp"

using namespace softrod;
using nlohmann::json;

TEST(Trajectory, RecordFields) {
  TaskSpec spec;
  spec.task = Task::ik4d;
  Environment env(spec, SimConfig{});
  env.reset(0);
  std::vector<double> a(env.action_dim(), 0.25);
  const StepResult r = env.step(a);
  const json j = json::parse(trajectory_record(env, a, r, 4));
  for (const char* key : {"t", "node_positions", "kappa_bar", "action", "reward", "info"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_DOUBLE_EQ(j["t"].get<double>(), env.time());
  EXPECT_EQ(j["node_positions"].size(), 21u);
  EXPECT_EQ(j["node_positions"][20].size(), 3u);
  EXPECT_EQ(j["kappa_bar"].size(), 19u);
  EXPECT_EQ(j["action"].get<std::vector<double>>(), a);
  EXPECT_DOUBLE_EQ(j["reward"].get<double>(), r.reward);
  const json& info = j["info"];
  EXPECT_EQ(info["episode"], 4);
  EXPECT_EQ(info["control_step"], 1);
  for (const char* key :
       {"terminated", "truncated", "distance", "yaw_error", "success", "solver_failure",
        "action_clipped", "newton_iterations", "max_newton_iterations", "residual", "converged",
        "max_penetration", "message"}) {
    EXPECT_TRUE(info.contains(key)) << key;
  }
  EXPECT_DOUBLE_EQ(j["node_positions"][20][0].get<double>(), env.tip().x());
}

TEST(Trajectory, WriterEmitsOneLinePerStep) {
  TaskSpec spec;
  spec.episode_length = 6;
  Environment env(spec, SimConfig{});
  env.reset(1);
  std::ostringstream out;
  TrajectoryWriter w(out);
  const std::vector<double> zero(env.action_dim(), 0.0);
  while (!env.done()) w.write(env, zero, env.step(zero));
  EXPECT_EQ(w.records(), 6u);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    EXPECT_TRUE(json::accept(line));
    ++n;
  }
  EXPECT_EQ(n, 6);
}

TEST(Trajectory, DiscountedReturn) {
  const std::vector<double> r{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(discounted_return(r, 0.5), 1.0 + 1.0 + 0.75);
  EXPECT_DOUBLE_EQ(discounted_return({}, 0.9), 0.0);
}
