#include "softrod/trajectory.hpp"

#include <json.hpp>

namespace softrod {

std::string trajectory_record(const Environment& env, std::span<const double> action,
                              const StepResult& result, int episode) {
  using nlohmann::json;
  json rec;
  rec["t"] = env.time();
  json nodes = json::array();
  for (const Vec3& p : env.rod().state.positions) nodes.push_back({p.x(), p.y(), p.z()});
  rec["node_positions"] = std::move(nodes);
  json kappa = json::array();
  for (const Vec2& k : env.rod().rest.nat_curvature) kappa.push_back({k.x(), k.y()});
  rec["kappa_bar"] = std::move(kappa);
  rec["action"] = std::vector<double>(action.begin(), action.end());
  rec["reward"] = result.reward;
  const StepInfo& i = result.info;
  rec["info"] = {{"episode", episode},
                 {"control_step", env.control_step()},
                 {"terminated", result.terminated},
                 {"truncated", result.truncated},
                 {"distance", i.distance},
                 {"yaw_error", i.yaw_error},
                 {"success", i.success},
                 {"solver_failure", i.solver_failure},
                 {"action_clipped", i.action_clipped},
                 {"newton_iterations", i.newton_iterations},
                 {"max_newton_iterations", i.max_newton_iterations},
                 {"residual", i.residual},
                 {"converged", i.converged},
                 {"max_penetration", i.max_penetration},
                 {"message", i.message}};
  return rec.dump();
}

void TrajectoryWriter::write(const Environment& env, std::span<const double> action,
                             const StepResult& result, int episode) {
  out_ << trajectory_record(env, action, result, episode) << '\n';
  ++records_;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 1.0;
  double total = 0.0;
  for (double r : rewards) {
    total += g * r;
    g *= gamma;
  }
  return total;
}

}  // namespace softrod
