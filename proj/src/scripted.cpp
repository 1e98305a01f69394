#include "softrod/scripted.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <sstream>

#include "softrod/errors.hpp"

namespace softrod {

std::vector<double> scripted_action(const Environment& env, const Vec3& goal,
                                    const ScriptedOptions& options) {
  const std::size_t dim = env.action_dim();
  std::vector<double> zero(dim, 0.0);
  if (env.done()) return zero;

  auto probe_tip = [&](const std::vector<double>& action) {
    Environment copy = env;
    copy.step(action);
    return copy.tip();
  };
  const Vec3 tip0 = probe_tip(zero);
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<double> a = zero;
    a[k] = options.probe;
    jac.col(static_cast<Eigen::Index>(k)) = (probe_tip(a) - tip0) / options.probe;
  }
  const Vec3 err = goal - tip0;
  const Eigen::Matrix3d jjt =
      jac * jac.transpose() + options.damping * Eigen::Matrix3d::Identity();
  const Eigen::VectorXd a = jac.transpose() * jjt.ldlt().solve(err);
  std::vector<double> out(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    out[k] = std::clamp(a[static_cast<Eigen::Index>(k)], -options.max_action, options.max_action);
  }
  return out;
}

std::vector<std::vector<double>> load_actions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open action file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(rows.front().size()) + " values");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_actions(const std::filesystem::path& path,
                  const std::vector<std::vector<double>>& actions,
                  const std::string& header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write action file " + path.string());
  if (!header.empty()) {
    std::istringstream ss(header);
    std::string line;
    while (std::getline(ss, line)) out << "# " << line << '\n';
  }
  out.precision(17);
  for (const auto& row : actions) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << row[k];
    out << '\n';
  }
}

std::vector<std::vector<double>> script_tight_gap(const TaskSpec& spec,
                                                  const SimConfig& config,
                                                  std::uint64_t seed) {
  if (spec.task != Task::obstacles2d_tight) {
    throw InvalidParameterError("script_tight_gap needs the obstacles2d_tight task");
  }
  Environment env(spec, config);
  env.reset(seed);
  const Vec3 goal = tight_gap_target(config.rod.length);
  std::vector<std::vector<double>> actions;
  while (!env.done()) {
    const std::vector<double> a = scripted_action(env, goal);
    actions.push_back(a);
    env.step(a);
  }
  return actions;
}

}  // namespace softrod
