#include "softrod/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "softrod/errors.hpp"

namespace softrod {

namespace {

using nlohmann::json;

// Reads keys from one JSON object, remembering which ones were consumed so
// that leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0) {
            throw ConfigError("");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    }
  }

  void get_vec3(const char* key, Vec3& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_array() || it->size() != 3) {
      throw ConfigError(where() + "." + key + " must be a 3-element array");
    }
    for (int i = 0; i < 3; ++i) {
      if (!(*it)[i].is_number()) throw ConfigError(where() + "." + key + " must be numeric");
      out[i] = (*it)[i].get<double>();
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + where() + "." + key);
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json(const RunConfig& c) {
  const SimConfig& s = c.sim;
  json j;
  j["task"] = std::string(task_name(c.task));
  j["scheme"] = std::string(scheme_name(c.scheme));
  j["seed"] = c.seed;
  j["episodes"] = c.episodes;
  j["envs"] = c.envs;
  j["workers"] = c.workers;
  j["output"] = c.output;
  j["rod"] = {{"n_nodes", s.rod.n_nodes},   {"length", s.rod.length},
              {"radius", s.rod.radius},     {"density", s.rod.density},
              {"youngs_modulus", s.rod.youngs}, {"poisson_ratio", s.rod.poisson}};
  j["control"] = {{"n_control_points", s.n_control_points},
                  {"delta_limit", s.delta_limit},
                  {"kappa_bound", s.kappa_bound}};
  j["implicit"] = {{"dt", s.implicit_dt},
                   {"control_period_noncontact", s.implicit_period_noncontact},
                   {"control_period_contact", s.implicit_period_contact},
                   {"max_newton_iters_noncontact", s.newton_iters_noncontact},
                   {"max_newton_iters_contact", s.newton_iters_contact},
                   {"newton_tol", s.newton_tol},
                   {"contact_stiffness", s.imc_stiffness},
                   {"contact_delta", s.imc_delta},
                   {"line_search", s.line_search},
                   {"project_hessian", s.project_hessian}};
  j["explicit"] = {{"dt", s.explicit_dt},
                   {"control_period_noncontact", s.explicit_period_noncontact},
                   {"control_period_contact", s.explicit_period_contact},
                   {"contact_stiffness", s.penalty_stiffness},
                   {"contact_damping", s.penalty_damping}};
  j["dynamics"] = {{"damping_coeff", s.damping_coeff},
                   {"gravity", {s.gravity.x(), s.gravity.y(), s.gravity.z()}}};
  j["task_params"] = {{"episode_length_noncontact", s.episode_length_noncontact},
                      {"episode_length_contact", s.episode_length_contact},
                      {"success_radius", s.success_radius},
                      {"yaw_tolerance", s.yaw_tolerance},
                      {"success_hold", s.success_hold},
                      {"success_bonus", s.success_bonus},
                      {"failure_reward", s.failure_reward},
                      {"target_speed", s.target_speed},
                      {"gamma", s.gamma}};
  return j;
}

}  // namespace

void RunConfig::validate() const {
  sim.validate();
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (envs < 1) throw ConfigError("envs must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

RunConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  SimConfig& s = c.sim;
  Reader r(root, "");
  std::string task(task_name(c.task));
  std::string scheme(scheme_name(c.scheme));
  r.get("task", task);
  r.get("scheme", scheme);
  c.task = parse_task(task);
  c.scheme = parse_scheme(scheme);
  r.get("seed", c.seed);
  r.get("episodes", c.episodes);
  r.get("envs", c.envs);
  r.get("workers", c.workers);
  r.get("output", c.output);

  if (const json* j = r.child("rod")) {
    Reader g(*j, "rod");
    g.get("n_nodes", s.rod.n_nodes);
    g.get("length", s.rod.length);
    g.get("radius", s.rod.radius);
    g.get("density", s.rod.density);
    g.get("youngs_modulus", s.rod.youngs);
    g.get("poisson_ratio", s.rod.poisson);
    g.finish();
  }
  if (const json* j = r.child("control")) {
    Reader g(*j, "control");
    g.get("n_control_points", s.n_control_points);
    g.get("delta_limit", s.delta_limit);
    g.get("kappa_bound", s.kappa_bound);
    g.finish();
  }
  if (const json* j = r.child("implicit")) {
    Reader g(*j, "implicit");
    g.get("dt", s.implicit_dt);
    g.get("control_period_noncontact", s.implicit_period_noncontact);
    g.get("control_period_contact", s.implicit_period_contact);
    g.get("max_newton_iters_noncontact", s.newton_iters_noncontact);
    g.get("max_newton_iters_contact", s.newton_iters_contact);
    g.get("newton_tol", s.newton_tol);
    g.get("contact_stiffness", s.imc_stiffness);
    g.get("contact_delta", s.imc_delta);
    g.get("line_search", s.line_search);
    g.get("project_hessian", s.project_hessian);
    g.finish();
  }
  if (const json* j = r.child("explicit")) {
    Reader g(*j, "explicit");
    g.get("dt", s.explicit_dt);
    g.get("control_period_noncontact", s.explicit_period_noncontact);
    g.get("control_period_contact", s.explicit_period_contact);
    g.get("contact_stiffness", s.penalty_stiffness);
    g.get("contact_damping", s.penalty_damping);
    g.finish();
  }
  if (const json* j = r.child("dynamics")) {
    Reader g(*j, "dynamics");
    g.get("damping_coeff", s.damping_coeff);
    g.get_vec3("gravity", s.gravity);
    g.finish();
  }
  if (const json* j = r.child("task_params")) {
    Reader g(*j, "task_params");
    g.get("episode_length_noncontact", s.episode_length_noncontact);
    g.get("episode_length_contact", s.episode_length_contact);
    g.get("success_radius", s.success_radius);
    g.get("yaw_tolerance", s.yaw_tolerance);
    g.get("success_hold", s.success_hold);
    g.get("success_bonus", s.success_bonus);
    g.get("failure_reward", s.failure_reward);
    g.get("target_speed", s.target_speed);
    g.get("gamma", s.gamma);
    g.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace softrod
