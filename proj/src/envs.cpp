#include "softrod/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "softrod/errors.hpp"

namespace softrod {

namespace {

constexpr int kPathSamples = 32;  // arc-length table entries per segment

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Surface gap between two capsules (spheres as degenerate capsules).
double capsule_gap(const Vec3& a0, const Vec3& a1, double ra, const Vec3& b0,
                   const Vec3& b1, double rb) {
  return closest_segment_segment(a0, a1, b0, b1).distance - ra - rb;
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::follow_target:
      return "follow_target";
    case Task::ik4d:
      return "ik4d";
    case Task::obstacles2d_tight:
      return "obstacles2d_tight";
    case Task::obstacles3d_random:
      return "obstacles3d_random";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::follow_target, Task::ik4d, Task::obstacles2d_tight,
                 Task::obstacles3d_random}) {
    if (task_name(t) == name) return t;
  }
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::string_view scheme_name(Scheme scheme) {
  return scheme == Scheme::implicit ? "implicit" : "explicit";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "implicit") return Scheme::implicit;
  if (name == "explicit") return Scheme::explicit_euler;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

bool is_contact_task(Task task) {
  return task == Task::obstacles2d_tight || task == Task::obstacles3d_random;
}

ControlMode task_control_mode(Task task) {
  switch (task) {
    case Task::follow_target:
    case Task::obstacles3d_random:
      return ControlMode::bend3d;
    case Task::ik4d:
      return ControlMode::bend3d_twist;
    case Task::obstacles2d_tight:
      return ControlMode::bend2d;
  }
  return ControlMode::bend3d;
}

void SimConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(rod.length, "rod length");
  positive(rod.radius, "rod radius");
  positive(rod.density, "density");
  positive(rod.youngs, "Young's modulus");
  if (rod.n_nodes < 3) throw ConfigError("n_nodes must be >= 3");
  if (n_control_points < 1 || n_control_points > rod.n_nodes - 2) {
    throw ConfigError("n_control_points must lie in [1, n_nodes - 2]");
  }
  positive(delta_limit, "delta_limit");
  positive(kappa_bound, "kappa_bound");
  positive(implicit_dt, "implicit dt");
  positive(explicit_dt, "explicit dt");
  positive(newton_tol, "newton_tol");
  positive(imc_stiffness, "IMC stiffness");
  positive(imc_delta, "IMC delta");
  positive(penalty_stiffness, "penalty stiffness");
  for (int p : {implicit_period_noncontact, implicit_period_contact,
                explicit_period_noncontact, explicit_period_contact,
                newton_iters_noncontact, newton_iters_contact,
                episode_length_noncontact, episode_length_contact, success_hold}) {
    if (p < 1) throw ConfigError("periods, iteration caps and lengths must be >= 1");
  }
  if (!(penalty_damping >= 0.0) || !(damping_coeff >= 0.0)) {
    throw ConfigError("damping must be non-negative");
  }
  if (!(success_radius > 0.0) || !(yaw_tolerance > 0.0)) {
    throw ConfigError("success tolerances must be positive");
  }
  if (!(target_speed >= 0.0)) throw ConfigError("target_speed must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!gravity.allFinite()) throw ConfigError("gravity must be finite");
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

Vec3 sample_workspace_point(std::mt19937_64& rng, double length) {
  const double cos_max = std::cos(std::numbers::pi / 4.0);
  const double c = uniform(rng, cos_max, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double d = uniform(rng, 0.6, 0.85) * length;
  return d * Vec3(c, s * std::cos(phi), s * std::sin(phi));
}

// ------------------------------------------------------------- target path

TargetPath::TargetPath(std::vector<Vec3> waypoints) : points_(std::move(waypoints)) {
  if (points_.size() < 2) throw InvalidParameterError("a path needs two waypoints");
  cumulative_.push_back(0.0);
  samples_.emplace_back(0, 0.0);
  Vec3 prev = points_.front();
  for (std::size_t seg = 0; seg + 1 < points_.size(); ++seg) {
    for (int k = 1; k <= kPathSamples; ++k) {
      const double u = static_cast<double>(k) / kPathSamples;
      const Vec3 p = eval(seg, u);
      cumulative_.push_back(cumulative_.back() + (p - prev).norm());
      samples_.emplace_back(seg, u);
      prev = p;
    }
  }
}

Vec3 TargetPath::eval(std::size_t seg, double u) const {
  const std::size_t m = points_.size();
  const Vec3& p1 = points_[seg];
  const Vec3& p2 = points_[seg + 1];
  const Vec3 p0 = seg == 0 ? Vec3(2.0 * p1 - p2) : points_[seg - 1];
  const Vec3 p3 = seg + 2 < m ? points_[seg + 2] : Vec3(2.0 * p2 - p1);
  const double u2 = u * u;
  const double u3 = u2 * u;
  return 0.5 * (2.0 * p1 + (p2 - p0) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * u3);
}

Vec3 TargetPath::deriv(std::size_t seg, double u) const {
  const std::size_t m = points_.size();
  const Vec3& p1 = points_[seg];
  const Vec3& p2 = points_[seg + 1];
  const Vec3 p0 = seg == 0 ? Vec3(2.0 * p1 - p2) : points_[seg - 1];
  const Vec3 p3 = seg + 2 < m ? points_[seg + 2] : Vec3(2.0 * p2 - p1);
  return 0.5 * ((p2 - p0) + 2.0 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u +
                3.0 * (3.0 * p1 - p0 - 3.0 * p2 + p3) * u * u);
}

std::pair<std::size_t, double> TargetPath::locate(double s) const {
  s = std::clamp(s, 0.0, length());
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  if (it == cumulative_.end()) return samples_.back();
  const std::size_t hi = static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t lo = hi - 1;
  const double span = cumulative_[hi] - cumulative_[lo];
  const double f = span > 0.0 ? (s - cumulative_[lo]) / span : 0.0;
  const auto [seg_hi, u_hi] = samples_[hi];
  const double u_lo = samples_[lo].first == seg_hi ? samples_[lo].second : 0.0;
  return {seg_hi, u_lo + f * (u_hi - u_lo)};
}

Vec3 TargetPath::position(double arc_length) const {
  const auto [seg, u] = locate(arc_length);
  return eval(seg, u);
}

Vec3 TargetPath::tangent(double arc_length) const {
  if (arc_length >= length()) return Vec3::Zero();
  const auto [seg, u] = locate(arc_length);
  const Vec3 d = deriv(seg, u);
  const double n = d.norm();
  return n > 0.0 ? Vec3(d / n) : Vec3::Zero();
}

// ------------------------------------------------------------ task scenes

std::vector<Obstacle> tight_gap_obstacles(double length) {
  // Two disks in the x-z plane (capsules along y), one above and one below
  // the rest axis, leaving the clearance open around the slot center.
  const double r = 0.1 * length;
  const Vec3 c = tight_gap_center(length);
  const double offset = 0.5 * kTightGapClearance + r;
  const double half = 0.3 * length;
  std::vector<Obstacle> out;
  for (double sign : {-1.0, 1.0}) {
    const Vec3 axis_center = c + Vec3(0.0, 0.0, sign * offset);
    out.push_back(Obstacle::capsule(axis_center - Vec3(0.0, half, 0.0),
                                    axis_center + Vec3(0.0, half, 0.0), r));
  }
  return out;
}

Vec3 tight_gap_center(double length) { return Vec3(0.3, 0.0, 0.0) * length; }
Vec3 tight_gap_target(double length) { return Vec3(0.85, 0.0, 0.25) * length; }

Vec3 random_obstacles_target(double length) { return Vec3(0.55, 0.35, 0.35) * length; }

std::vector<Obstacle> random_obstacles(std::mt19937_64& rng, const RodParams& rod,
                                       const Vec3& target) {
  const double len = rod.length;
  const Vec3 lo = Vec3(0.15, -0.6, -0.6) * len;
  const Vec3 hi = Vec3(1.0, 0.6, 0.6) * len;
  const double margin = 0.02 * len;
  const Vec3 rod_a = Vec3::Zero();
  const Vec3 rod_b = Vec3(len, 0.0, 0.0);
  std::vector<Obstacle> out;
  for (int attempt = 0; out.size() < 8; ++attempt) {
    if (attempt > 100000) throw Error("obstacle rejection sampling did not terminate");
    const Vec3 center(uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y()),
                      uniform(rng, lo.z(), hi.z()));
    Vec3 dir(std::normal_distribution<double>()(rng),
             std::normal_distribution<double>()(rng),
             std::normal_distribution<double>()(rng));
    if (dir.norm() < 1e-9) continue;
    dir.normalize();
    const double radius = uniform(rng, 0.04, 0.07) * len;
    const double half = uniform(rng, 0.05, 0.15) * len;
    const Vec3 a = center - half * dir;
    const Vec3 b = center + half * dir;
    const Vec3 box_lo = a.cwiseMin(b).array() - radius;
    const Vec3 box_hi = a.cwiseMax(b).array() + radius;
    if ((box_lo.array() < lo.array()).any() || (box_hi.array() > hi.array()).any()) continue;
    if (capsule_gap(a, b, radius, rod_a, rod_b, rod.radius) <= margin) continue;
    if (capsule_gap(a, b, radius, target, target, rod.radius) <= margin) continue;
    bool clear = true;
    for (const Obstacle& o : out) {
      if (capsule_gap(a, b, radius, o.a, o.b, o.radius) <= margin) {
        clear = false;
        break;
      }
    }
    if (clear) out.push_back(Obstacle::capsule(a, b, radius));
  }
  return out;
}

// ------------------------------------------------------------ environment

Environment::Environment(const TaskSpec& spec, const SimConfig& config)
    : spec_(spec), config_(config) {
  config_.validate();
  if (spec_.episode_length < 0) throw ConfigError("episode_length must be >= 0");
  const bool contact = is_contact_task(spec_.task);
  const bool implicit = spec_.scheme == Scheme::implicit;

  control_.n_control_points = config_.n_control_points;
  control_.mode = task_control_mode(spec_.task);
  control_.delta_limit = config_.delta_limit;
  control_.kappa_bound = config_.kappa_bound;
  if (implicit) {
    control_.control_period =
        contact ? config_.implicit_period_contact : config_.implicit_period_noncontact;
  } else {
    control_.control_period =
        contact ? config_.explicit_period_contact : config_.explicit_period_noncontact;
  }
  control_.validate();

  contact_.stiffness = implicit ? config_.imc_stiffness : config_.penalty_stiffness;
  contact_.delta = config_.imc_delta;
  contact_.damping = config_.penalty_damping;
  contact_.validate();

  episode_length_ = spec_.episode_length > 0
                        ? spec_.episode_length
                        : (contact ? config_.episode_length_contact
                                   : config_.episode_length_noncontact);

  rest_rod_ = build_rod(config_.rod);
  StepperConfig sc;
  sc.dt = implicit ? config_.implicit_dt : config_.explicit_dt;
  sc.max_newton_iters = contact ? config_.newton_iters_contact : config_.newton_iters_noncontact;
  sc.newton_tol = config_.newton_tol;
  sc.damping_coeff = config_.damping_coeff;
  sc.gravity = config_.gravity;
  sc.line_search = config_.line_search;
  sc.project_hessian = config_.project_hessian;
  const ClampSpec clamp = ClampSpec::cantilever(rest_rod_.state);
  if (implicit) {
    implicit_ = ImplicitStepper(sc, clamp);
  } else {
    explicit_ = ExplicitStepper(sc, clamp);
  }
  reset(0);
}

double Environment::sim_dt() const {
  return spec_.scheme == Scheme::implicit ? config_.implicit_dt : config_.explicit_dt;
}

void Environment::build_scene(std::mt19937_64& rng) {
  const double len = config_.rod.length;
  obstacles_.clear();
  path_ = TargetPath();
  target_yaw_ = 0.0;
  switch (spec_.task) {
    case Task::follow_target: {
      const double needed = config_.target_speed * episode_length_ *
                                control_.control_period * sim_dt() +
                            0.5 * len;
      std::vector<Vec3> pts{sample_workspace_point(rng, len)};
      double chord = 0.0;
      while (pts.size() < 2 || chord < needed) {
        pts.push_back(sample_workspace_point(rng, len));
        chord += (pts.back() - pts[pts.size() - 2]).norm();
      }
      path_ = TargetPath(std::move(pts));
      break;
    }
    case Task::ik4d:
      target_ = sample_workspace_point(rng, len);
      target_yaw_ = uniform(rng, -std::numbers::pi, std::numbers::pi);
      break;
    case Task::obstacles2d_tight:
      obstacles_ = tight_gap_obstacles(len);
      target_ = tight_gap_target(len);
      break;
    case Task::obstacles3d_random:
      target_ = random_obstacles_target(len);
      obstacles_ = random_obstacles(rng, config_.rod, target_);
      break;
  }
}

void Environment::update_target() {
  if (spec_.task != Task::follow_target || target_overridden_) return;
  Vec3 p = path_.position(config_.target_speed * time_);
  const double limit = 0.95 * config_.rod.length;
  if (p.norm() > limit) p *= limit / p.norm();
  target_ = p;
}

Vec3 Environment::target_velocity() const {
  if (spec_.task != Task::follow_target || target_overridden_) return Vec3::Zero();
  return config_.target_speed * path_.tangent(config_.target_speed * time_);
}

void Environment::set_target(const Vec3& position, double yaw) {
  target_ = position;
  target_yaw_ = yaw;
  target_overridden_ = true;
}

std::vector<double> Environment::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  rod_ = rest_rod_;
  actuation_ = ActuationState::zero(rod_.state.num_nodes());
  control_step_ = 0;
  time_ = 0.0;
  hold_ = 0;
  done_ = false;
  target_overridden_ = false;
  build_scene(rng);
  update_target();
  return observation();
}

double Environment::tip_yaw() const {
  double sum = 0.0;
  for (double psi : integrated_twists(rod_.state, rod_.frames)) sum += psi;
  return wrap_angle(sum);
}

std::size_t Environment::observation_dim() const {
  const std::size_t c = control_.n_control_points;
  std::size_t dim = 6 * (c + 1) + 3 * c + 3;
  if (spec_.task == Task::follow_target) dim += 3;
  if (spec_.task == Task::ik4d) dim += 4;
  return dim;
}

std::vector<double> Environment::observation() const {
  const double len = config_.rod.length;
  const double bound = control_.kappa_bound;
  std::vector<double> obs;
  obs.reserve(observation_dim());
  std::vector<std::size_t> nodes = control_point_nodes(rod_.state.num_nodes(),
                                                       control_.n_control_points);
  const std::vector<std::size_t> cps = nodes;
  nodes.push_back(rod_.state.num_nodes() - 1);
  for (std::size_t n : nodes) {
    const Vec3 p = rod_.state.positions[n] / len;
    const Vec3& v = rod_.state.velocities[n];
    obs.insert(obs.end(), {p.x(), p.y(), p.z(), v.x(), v.y(), v.z()});
  }
  for (std::size_t n : cps) {
    const Vec2& k = actuation_.kappa_target[n - 1];
    obs.insert(obs.end(), {k.x() / bound, k.y() / bound, actuation_.twist_target[n - 1] / bound});
  }
  const Vec3 t = target_ / len;
  obs.insert(obs.end(), {t.x(), t.y(), t.z()});
  if (spec_.task == Task::follow_target) {
    const double scale = config_.target_speed > 0.0 ? 1.0 / config_.target_speed : 0.0;
    const Vec3 tv = target_velocity() * scale;
    obs.insert(obs.end(), {tv.x(), tv.y(), tv.z()});
  }
  if (spec_.task == Task::ik4d) {
    const double yaw = tip_yaw();
    obs.insert(obs.end(), {std::sin(target_yaw_), std::cos(target_yaw_), std::sin(yaw),
                           std::cos(yaw)});
  }
  return obs;
}

StepResult Environment::step(std::span<const double> action) {
  if (action.size() != action_dim()) throw DimensionMismatchError(action_dim(), action.size());
  if (done_) throw Error("episode has ended; call reset first");

  StepResult result;
  StepInfo& info = result.info;
  info.action_clipped = apply_action(action, actuation_, control_);

  const int period = control_.control_period;
  const double dt = sim_dt();
  try {
    for (int s = 0; s < period; ++s) {
      interp_targets(actuation_, s, period, rod_.rest);
      actuation_.substep = s;
      const StepStats stats = spec_.scheme == Scheme::implicit
                                  ? implicit_.step(rod_, obstacles_, contact_)
                                  : explicit_.step(rod_, obstacles_, contact_);
      info.newton_iterations += stats.newton_iterations;
      info.max_newton_iterations = std::max(info.max_newton_iterations, stats.newton_iterations);
      info.residual = std::max(info.residual, stats.residual);
      info.converged = info.converged && stats.converged;
      info.max_penetration = std::max(info.max_penetration, stats.max_penetration);
      time_ += dt;
    }
  } catch (const Error& e) {
    info.solver_failure = true;
    info.message = e.what();
  }
  ++control_step_;
  update_target();

  const double len = config_.rod.length;
  info.distance = (tip() - target_).norm();
  if (info.solver_failure) {
    result.reward = config_.failure_reward;
    result.terminated = true;
  } else {
    result.reward = -info.distance / len;
    bool success = info.distance <= config_.success_radius * len;
    if (spec_.task == Task::ik4d) {
      info.yaw_error = std::abs(wrap_angle(tip_yaw() - target_yaw_));
      result.reward -= info.yaw_error / std::numbers::pi;
      success = success && info.yaw_error <= config_.yaw_tolerance;
    }
    hold_ = success ? hold_ + 1 : 0;
    if (hold_ >= config_.success_hold) {
      info.success = true;
      result.reward += config_.success_bonus;
      result.terminated = true;
    }
  }
  result.truncated = !result.terminated && control_step_ >= episode_length_;
  done_ = result.terminated || result.truncated;
  result.observation = observation();
  return result;
}

}  // namespace softrod
