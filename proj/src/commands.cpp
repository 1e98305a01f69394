#include "softrod/commands.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "softrod/errors.hpp"
#include "softrod/scripted.hpp"
#include "softrod/trajectory.hpp"
#include "softrod/vector_env.hpp"

namespace softrod {

namespace {

double control_duration(const Environment& env) {
  return env.sim_dt() * env.control_period();
}

TaskSpec spec_of(Task task, Scheme scheme, int episode_length = 0) {
  TaskSpec spec;
  spec.task = task;
  spec.scheme = scheme;
  spec.episode_length = episode_length;
  return spec;
}

}  // namespace

// ------------------------------------------------------------------ bench

std::vector<BenchRow> run_bench(const RunConfig& config, const BenchOptions& options) {
  if (options.steps < 1) throw InvalidParameterError("bench needs at least one step");
  std::vector<BenchRow> rows;
  for (Task task : options.tasks) {
    for (std::size_t n : options.env_counts) {
      // Both schemes step alternately on the same actions so that load
      // fluctuations on the machine hit them equally.
      const Scheme schemes[2] = {Scheme::implicit, Scheme::explicit_euler};
      std::vector<VectorEnv> venvs;
      for (Scheme scheme : schemes) {
        venvs.emplace_back(spec_of(task, scheme), config.sim, n, config.seed, config.workers);
      }
      const std::size_t dim = venvs[0].action_dim();
      std::mt19937_64 rng(policy_seed(config.seed));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> actions(n * dim);
      double elapsed[2] = {0.0, 0.0};
      for (int s = 0; s < options.steps; ++s) {
        for (double& a : actions) a = u(rng);
        for (int k = 0; k < 2; ++k) {
          VectorEnv& venv = venvs[k];
          for (std::size_t i = 0; i < n; ++i) {
            if (venv.env(i).done()) venv.reset_env(i, config.seed + i + 1000 * (s + 1));
          }
          const auto t0 = std::chrono::steady_clock::now();
          venv.step(actions);
          elapsed[k] +=
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
      }
      double rate[2];
      BenchRow group[2];
      for (int k = 0; k < 2; ++k) {
        group[k].scheme = schemes[k];
        group[k].task = task;
        group[k].envs = n;
        group[k].ms_per_vector_step = 1e3 * elapsed[k] / options.steps;
        group[k].substeps_per_control_step = venvs[k].env(0).control_period();
        rate[k] = control_duration(venvs[k].env(0)) * 1e3 / group[k].ms_per_vector_step;
      }
      for (int k = 0; k < 2; ++k) {
        group[k].speedup_vs_explicit = rate[k] / rate[1];
        rows.push_back(group[k]);
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "scheme,task,envs,ms_per_vector_step,speedup_vs_explicit,substeps_per_control_step\n";
  for (const BenchRow& r : rows) {
    out << scheme_name(r.scheme) << ',' << task_name(r.task) << ',' << r.envs << ','
        << std::setprecision(6) << r.ms_per_vector_step << ',' << r.speedup_vs_explicit
        << ',' << r.substeps_per_control_step << '\n';
  }
}

// ---------------------------------------------------------------- rollout

Policy Policy::parse(const std::string& spec) {
  Policy p;
  p.source = spec;
  if (spec == "zero") {
    p.kind = Kind::zero;
  } else if (spec == "random") {
    p.kind = Kind::random;
  } else {
    p.kind = Kind::file;
    p.actions = load_actions(spec);
    if (p.actions.empty()) throw Error("action file " + spec + " has no rows");
  }
  return p;
}

std::uint64_t policy_seed(std::uint64_t episode_seed) {
  return episode_seed * 0x9E3779B97F4A7C15ULL + 0x5EEDULL;
}

std::vector<double> policy_action(const Policy& policy, std::size_t action_dim,
                                  int control_step, std::mt19937_64& rng) {
  std::vector<double> a(action_dim, 0.0);
  switch (policy.kind) {
    case Policy::Kind::zero:
      break;
    case Policy::Kind::random: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (double& x : a) x = u(rng);
      break;
    }
    case Policy::Kind::file: {
      if (policy.actions.front().size() != action_dim) {
        throw DimensionMismatchError(action_dim, policy.actions.front().size());
      }
      const auto k = static_cast<std::size_t>(control_step);
      if (k < policy.actions.size()) a = policy.actions[k];
      break;
    }
  }
  return a;
}

std::vector<EpisodeSummary> run_rollout(const RunConfig& config, const Policy& policy,
                                        std::ostream* trajectory) {
  config.validate();
  const std::size_t n = config.envs;
  VectorEnv venv(spec_of(config.task, config.scheme), config.sim, n, config.seed,
                 config.workers);
  const std::size_t dim = venv.action_dim();
  std::vector<EpisodeSummary> out;

  for (int first = 0; first < config.episodes; first += static_cast<int>(n)) {
    const std::size_t batch = std::min<std::size_t>(n, config.episodes - first);
    std::vector<std::mt19937_64> rngs(n);
    std::vector<std::vector<double>> rewards(n);
    std::vector<std::ostringstream> records(n);
    std::vector<EpisodeSummary> summary(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t seed = config.seed + first + i;
      venv.reset_env(i, seed);
      rngs[i].seed(policy_seed(seed));
      summary[i].episode = first + static_cast<int>(i);
      summary[i].seed = seed;
    }
    std::vector<double> actions(n * dim, 0.0);
    auto active = [&] {
      for (std::size_t i = 0; i < batch; ++i) {
        if (!venv.env(i).done()) return true;
      }
      return false;
    };
    while (active()) {
      std::vector<int> steps(n);
      for (std::size_t i = 0; i < n; ++i) {
        steps[i] = venv.env(i).control_step();
        if (venv.env(i).done()) continue;
        const auto a = policy_action(policy, dim, steps[i], rngs[i]);
        std::copy(a.begin(), a.end(), actions.begin() + static_cast<std::ptrdiff_t>(i * dim));
      }
      std::vector<bool> was_done(n);
      for (std::size_t i = 0; i < n; ++i) was_done[i] = venv.env(i).done();
      const auto results = venv.step(actions);
      for (std::size_t i = 0; i < batch; ++i) {
        if (was_done[i]) continue;
        const StepResult& r = results[i];
        const std::span<const double> a(actions.data() + i * dim, dim);
        if (trajectory) {
          records[i] << trajectory_record(venv.env(i), a, r, summary[i].episode) << '\n';
        }
        EpisodeSummary& s = summary[i];
        rewards[i].push_back(r.reward);
        s.steps += 1;
        s.total_reward += r.reward;
        s.final_distance = r.info.distance;
        s.max_penetration = std::max(s.max_penetration, r.info.max_penetration);
        s.success = s.success || r.info.success;
        s.solver_failure = s.solver_failure || r.info.solver_failure;
      }
    }
    for (std::size_t i = 0; i < batch; ++i) {
      summary[i].discounted_return = discounted_return(rewards[i], config.sim.gamma);
      if (trajectory) *trajectory << records[i].str();
      out.push_back(summary[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------- compare

std::vector<double> sinusoid_action(std::size_t action_dim, int control_step) {
  std::vector<double> a(action_dim);
  for (std::size_t j = 0; j < action_dim; ++j) {
    a[j] = std::sin(0.3 * control_step + 0.7 * static_cast<double>(j));
  }
  return a;
}

namespace {

// Runs one episode with the given action source and collects the return,
// the tip trajectory and penetration statistics.
template <typename ActionFn>
SchemeStats run_episode(const TaskSpec& spec, const SimConfig& sim, std::uint64_t seed,
                        ActionFn&& action, std::vector<Vec3>* tips) {
  SchemeStats stats;
  Environment env(spec, sim);
  env.reset(seed);
  std::vector<double> rewards;
  double pen_sum = 0.0;
  while (!env.done()) {
    const StepResult r = env.step(action(env.action_dim(), env.control_step()));
    rewards.push_back(r.reward);
    stats.max_penetration = std::max(stats.max_penetration, r.info.max_penetration);
    pen_sum += r.info.max_penetration;
    if (tips) tips->push_back(env.tip());
    if (r.info.solver_failure) {
      stats.unstable = true;
      stats.message = r.info.message;
    }
  }
  stats.discounted_return = discounted_return(rewards, sim.gamma);
  stats.mean_penetration = rewards.empty() ? 0.0 : pen_sum / rewards.size();
  return stats;
}

}  // namespace

CompareReport run_compare(const RunConfig& config, const CompareOptions& options) {
  config.validate();
  CompareReport rep;
  const SimConfig& sim = config.sim;
  rep.length = sim.rod.length;

  // Cantilever settling under gravity with zero actions.
  {
    Vec3 tips[2];
    int idx = 0;
    for (Scheme scheme : {Scheme::implicit, Scheme::explicit_euler}) {
      Environment probe(spec_of(Task::follow_target, scheme), sim);
      const int steps =
          static_cast<int>(std::ceil(options.settle_time / control_duration(probe)));
      Environment env(spec_of(Task::follow_target, scheme, steps), sim);
      env.reset(config.seed);
      const std::vector<double> zero(env.action_dim(), 0.0);
      while (!env.done()) {
        const StepResult r = env.step(zero);
        if (r.info.solver_failure) rep.cantilever_explicit_stable = false;
      }
      tips[idx++] = env.tip();
    }
    rep.cantilever_implicit = tips[0];
    rep.cantilever_explicit = tips[1];
    rep.cantilever_difference = (tips[0] - tips[1]).norm();
  }

  // Open-loop action sequence on a non-contact task.
  rep.tracking_task = is_contact_task(config.task) ? Task::follow_target : config.task;
  {
    std::vector<Vec3> tips_i;
    std::vector<Vec3> tips_e;
    rep.tracking_implicit = run_episode(spec_of(rep.tracking_task, Scheme::implicit), sim,
                                        config.seed, sinusoid_action, &tips_i);
    rep.tracking_explicit = run_episode(spec_of(rep.tracking_task, Scheme::explicit_euler),
                                        sim, config.seed, sinusoid_action, &tips_e);
    const double ri = rep.tracking_implicit.discounted_return;
    const double re = rep.tracking_explicit.discounted_return;
    rep.return_relative_difference = std::abs(ri - re) / std::max(std::abs(re), 1e-12);
    const std::size_t m = std::min(tips_i.size(), tips_e.size());
    double sq = 0.0;
    for (std::size_t k = 0; k < m; ++k) sq += (tips_i[k] - tips_e[k]).squaredNorm();
    rep.tip_rms_divergence = m ? std::sqrt(sq / m) : 0.0;
  }

  // Random action sequences on a contact task, identical for both schemes.
  rep.contact_task = is_contact_task(config.task) ? config.task : options.contact_task;
  const Policy random = Policy::parse("random");
  for (int ep = 0; ep < options.contact_episodes; ++ep) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(ep);
    SchemeStats* slots[2] = {&rep.contact_implicit, &rep.contact_explicit};
    int idx = 0;
    for (Scheme scheme : {Scheme::implicit, Scheme::explicit_euler}) {
      std::mt19937_64 rng(policy_seed(seed));
      auto act = [&](std::size_t dim, int step) { return policy_action(random, dim, step, rng); };
      const SchemeStats s = run_episode(spec_of(rep.contact_task, scheme), sim, seed, act, nullptr);
      SchemeStats& acc = *slots[idx++];
      acc.discounted_return += s.discounted_return / options.contact_episodes;
      acc.max_penetration = std::max(acc.max_penetration, s.max_penetration);
      acc.mean_penetration += s.mean_penetration / options.contact_episodes;
      if (s.unstable && !acc.unstable) {
        acc.unstable = true;
        acc.message = s.message;
      }
    }
  }
  return rep;
}

void write_compare_report(std::ostream& out, const CompareReport& r) {
  auto vec = [](const Vec3& v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(5) << '(' << v.x() << ", " << v.y() << ", " << v.z()
      << ')';
    return s.str();
  };
  auto stats = [&](const char* label, const SchemeStats& s) {
    out << "  " << std::left << std::setw(9) << label << std::right
        << " return " << std::setw(10) << s.discounted_return << "  max_penetration "
        << std::setw(10) << s.max_penetration << " m  mean_penetration " << std::setw(10)
        << s.mean_penetration << " m";
    if (s.unstable) out << "  UNSTABLE: " << s.message;
    out << '\n';
  };
  out << std::setprecision(5);
  out << "cantilever settling (zero actions, gravity)\n"
      << "  implicit tip " << vec(r.cantilever_implicit) << "\n"
      << "  explicit tip " << vec(r.cantilever_explicit)
      << (r.cantilever_explicit_stable ? "" : "  UNSTABLE") << "\n"
      << "  difference   " << r.cantilever_difference << " m ("
      << 100.0 * r.cantilever_difference / r.length << "% of L)\n";
  out << "open-loop sequence on " << task_name(r.tracking_task) << "\n";
  stats("implicit", r.tracking_implicit);
  stats("explicit", r.tracking_explicit);
  out << "  return difference " << 100.0 * r.return_relative_difference << "%\n"
      << "  tip RMS divergence " << r.tip_rms_divergence << " m\n";
  out << "random sequences on " << task_name(r.contact_task) << "\n";
  stats("implicit", r.contact_implicit);
  stats("explicit", r.contact_explicit);
}

}  // namespace softrod
