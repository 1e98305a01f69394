// softrod: validation, rollouts, throughput benchmarks and scheme comparison.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "softrod/commands.hpp"
#include "softrod/errors.hpp"
#include "softrod/scripted.hpp"
#include "softrod/validate.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> task;
  std::optional<std::string> scheme;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> envs;
  std::optional<int> workers;
  std::optional<int> episodes;
  std::optional<std::string> out;
  std::string policy = "zero";
};

softrod::RunConfig resolve(const CommonFlags& f) {
  softrod::RunConfig cfg = f.config.empty() ? softrod::RunConfig{} : softrod::load_config(f.config);
  if (f.task) cfg.task = softrod::parse_task(*f.task);
  if (f.scheme) cfg.scheme = softrod::parse_scheme(*f.scheme);
  if (f.seed) cfg.seed = *f.seed;
  if (f.envs) cfg.envs = *f.envs;
  if (f.workers) cfg.workers = *f.workers;
  if (f.episodes) cfg.episodes = *f.episodes;
  if (f.out) cfg.output = *f.out;
  cfg.validate();
  return cfg;
}

// Opens config.output, or returns stdout when it is empty or "-".
std::ostream& open_output(const softrod::RunConfig& cfg, std::ofstream& file) {
  if (cfg.output.empty() || cfg.output == "-") return std::cout;
  file.open(cfg.output);
  if (!file) throw softrod::Error("cannot write " + cfg.output);
  return file;
}

int cmd_validate(const softrod::ValidateOptions& opts) {
  const softrod::ValidateReport report = softrod::run_validation(opts);
  for (const auto& c : report.checks) {
    std::printf("%-22s max_error %.3e  tol %.1e  %s\n", c.name.c_str(), c.max_error,
                c.tolerance, c.passed ? "ok" : "FAILED");
  }
  std::printf("%s\n", report.passed() ? "all checks passed" : "validation FAILED");
  return report.passed() ? 0 : 1;
}

int cmd_rollout(const softrod::RunConfig& cfg, const std::string& policy_spec) {
  const softrod::Policy policy = softrod::Policy::parse(policy_spec);
  std::ofstream file;
  std::ostream* traj = nullptr;
  if (!cfg.output.empty()) {
    file.open(cfg.output);
    if (!file) throw softrod::Error("cannot write " + cfg.output);
    traj = &file;
  }
  const auto episodes = softrod::run_rollout(cfg, policy, traj);
  for (const auto& e : episodes) {
    std::printf("episode %d seed %llu steps %d return %.6f distance %.4f%s%s\n", e.episode,
                static_cast<unsigned long long>(e.seed), e.steps, e.discounted_return,
                e.final_distance, e.success ? " success" : "",
                e.solver_failure ? " solver_failure" : "");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete elastic rod simulator for soft-manipulator control"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags flags;
  app.add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--task", flags.task,
                 "follow_target | ik4d | obstacles2d_tight | obstacles3d_random");
  app.add_option("--scheme", flags.scheme, "implicit | explicit");
  app.add_option("--seed", flags.seed, "base seed");
  app.add_option("--envs", flags.envs, "parallel environments");
  app.add_option("--workers", flags.workers, "worker threads (0: all, capped by SOFTROD_THREADS)");
  app.add_option("--episodes", flags.episodes, "episodes to run");
  app.add_option("--out", flags.out, "output file (trajectory JSONL, CSV or report)");

  auto* validate = app.add_subcommand("validate", "finite-difference and oracle checks");
  softrod::ValidateOptions vopts;
  validate->add_option("--states", vopts.n_states, "random states per check");
  validate->add_option("--gradient-tol", vopts.gradient_tol, "elastic gradient tolerance");
  validate->add_option("--hessian-tol", vopts.hessian_tol, "Hessian tolerance");
  validate->add_option("--contact-tol", vopts.contact_tol, "contact gradient tolerance");
  validate->add_option("--frame-tol", vopts.frame_tol, "frame orthonormality tolerance");
  validate->add_option("--solver-tol", vopts.solver_tol, "banded solver tolerance");
  validate->add_option("--curvature-tol", vopts.curvature_tol, "arc curvature tolerance");

  auto* bench = app.add_subcommand("bench", "implicit vs explicit throughput (CSV)");
  softrod::BenchOptions bopts;
  std::vector<std::string> bench_tasks;
  bench->add_option("--env-counts", bopts.env_counts, "env counts to measure")->delimiter(',');
  bench->add_option("--steps", bopts.steps, "timed vector steps per row");
  bench->add_option("--tasks", bench_tasks, "tasks to measure")->delimiter(',');

  auto* rollout = app.add_subcommand("rollout", "run episodes and export trajectories");
  rollout->add_option("--policy", flags.policy, "zero | random | action file");

  auto* compare = app.add_subcommand("compare", "implicit vs explicit agreement report");
  softrod::CompareOptions copts;
  compare->add_option("--settle-time", copts.settle_time, "cantilever settling time (s)");
  compare->add_option("--contact-episodes", copts.contact_episodes, "contact episodes");

  auto* script = app.add_subcommand("script", "write the scripted tight-gap action file");

  auto* config = app.add_subcommand("config", "print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(vopts);
    const softrod::RunConfig cfg = resolve(flags);
    if (*bench) {
      if (!bench_tasks.empty()) {
        bopts.tasks.clear();
        for (const auto& t : bench_tasks) bopts.tasks.push_back(softrod::parse_task(t));
      } else if (flags.task) {
        bopts.tasks = {cfg.task};
      }
      if (flags.envs) bopts.env_counts = {cfg.envs};
      std::ofstream file;
      softrod::write_bench_csv(open_output(cfg, file), softrod::run_bench(cfg, bopts));
    } else if (*rollout) {
      return cmd_rollout(cfg, flags.policy);
    } else if (*compare) {
      std::ofstream file;
      softrod::write_compare_report(open_output(cfg, file), softrod::run_compare(cfg, copts));
    } else if (*script) {
      softrod::TaskSpec spec;
      spec.task = softrod::Task::obstacles2d_tight;
      spec.scheme = cfg.scheme;
      const auto actions = softrod::script_tight_gap(spec, cfg.sim, cfg.seed);
      if (cfg.output.empty()) throw softrod::Error("script needs --out");
      softrod::save_actions(cfg.output, actions,
                            "scripted obstacles2d_tight actions, seed " + std::to_string(cfg.seed));
      std::printf("%zu actions written to %s\n", actions.size(), cfg.output.c_str());
    } else if (*config) {
      std::cout << softrod::dump_config(cfg) << '\n';
    }
  } catch (const softrod::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
