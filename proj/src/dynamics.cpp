#include "softrod/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "softrod/errors.hpp"

namespace softrod {

namespace {

double inf_norm(const VecX& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void zero_entries(VecX& v, const std::vector<std::size_t>& dofs) {
  for (std::size_t d : dofs) v[static_cast<Eigen::Index>(d)] = 0.0;
}

VecX gravity_force(const RestConfig& rest, const Vec3& g, std::size_t ndofs) {
  VecX f = VecX::Zero(static_cast<Eigen::Index>(ndofs));
  for (std::size_t i = 0; i < rest.lumped_masses.size(); ++i) {
    f.segment<3>(node_dof(i)) = rest.lumped_masses[i] * g;
  }
  return f;
}

}  // namespace

void StepperConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidParameterError("dt must be positive");
  if (max_newton_iters < 1) throw InvalidParameterError("max_newton_iters must be >= 1");
  if (!(newton_tol > 0.0)) throw InvalidParameterError("newton_tol must be positive");
  if (!(damping_coeff >= 0.0)) throw InvalidParameterError("damping_coeff must be >= 0");
  if (!gravity.allFinite()) throw InvalidParameterError("gravity must be finite");
}

ClampSpec ClampSpec::cantilever(const RodState& state) {
  ClampSpec c;
  c.nodes = {0, 1};
  c.node_targets = {state.positions[0], state.positions[1]};
  c.edges = {0};
  c.theta_targets = {state.thetas[0]};
  return c;
}

std::vector<std::size_t> ClampSpec::dofs() const {
  std::vector<std::size_t> out;
  for (std::size_t i : nodes) {
    for (std::size_t k = 0; k < 3; ++k) out.push_back(node_dof(i) + k);
  }
  for (std::size_t j : edges) out.push_back(theta_dof(j));
  std::sort(out.begin(), out.end());
  return out;
}

void ClampSpec::apply(RodState& state) const {
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    state.positions[nodes[k]] = node_targets[k];
    state.velocities[nodes[k]].setZero();
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    state.thetas[edges[k]] = theta_targets[k];
    state.theta_rates[edges[k]] = 0.0;
  }
}

VecX mass_vector(const RestConfig& rest) {
  const std::size_t n = rest.lumped_masses.size();
  VecX m(static_cast<Eigen::Index>(dof_count(n)));
  for (std::size_t i = 0; i < n; ++i) m.segment<3>(node_dof(i)).setConstant(rest.lumped_masses[i]);
  for (std::size_t j = 0; j + 1 < n; ++j) m[theta_dof(j)] = rest.theta_inertias[j];
  return m;
}

double total_energy(const Rod& rod, const Vec3& gravity) {
  const VecX m = mass_vector(rod.rest);
  const VecX v = rod.state.pack_velocities();
  double e = 0.5 * (m.array() * v.array().square()).sum();
  e += accumulate_elastic(rod.state, rod.frames, rod.rest, {}, nullptr, nullptr);
  for (std::size_t i = 0; i < rod.state.num_nodes(); ++i) {
    e -= rod.rest.lumped_masses[i] * gravity.dot(rod.state.positions[i]);
  }
  return e;
}

// ---------------------------------------------------------------- implicit

ImplicitStepper::ImplicitStepper(const StepperConfig& config, ClampSpec clamp)
    : config_(config), clamp_(std::move(clamp)), clamp_dofs_(clamp_.dofs()) {
  config_.validate();
}

void ImplicitStepper::ensure_workspace(const Rod& rod) {
  const std::size_t n = rod.state.num_dofs();
  if (static_cast<std::size_t>(mass_.size()) == n) return;
  mass_ = mass_vector(rod.rest);
  jac_ = BandedMatrix(n, kRodHalfBandwidth);
  grad_.resize(static_cast<Eigen::Index>(n));
  r_.resize(static_cast<Eigen::Index>(n));
}

double ImplicitStepper::residual(const Rod& rod, const FrameSet& frames,
                                 const RodState& trial,
                                 std::span<const Obstacle> obstacles,
                                 const ContactConfig& contact, bool with_hessian,
                                 double* penetration, std::size_t* npairs) {
  const double dt = config_.dt;
  grad_.setZero();
  if (with_hessian) jac_.set_zero();
  BandedMatrix* hess = with_hessian ? &jac_ : nullptr;
  ElasticOptions opts;
  opts.project_hessian = config_.project_hessian;
  accumulate_elastic(trial, frames, rod.rest, {}, &grad_, hess, opts);
  if (!obstacles.empty()) {
    pairs_ = detect(trial, rod.rest.radius, obstacles, 4.0 * contact.delta);
    accumulate_imc(pairs_, trial, rod.rest.radius, obstacles, contact, &grad_, hess, true);
    if (penetration) *penetration = max_penetration(pairs_);
    if (npairs) *npairs = pairs_.size();
  }
  const auto disp = (q_ - q_t_).array();
  r_ = (mass_.array() * ((disp - dt * v_t_.array()) / (dt * dt) +
                         config_.damping_coeff * disp / dt))
           .matrix() +
       grad_ - force_g_;
  zero_entries(r_, clamp_dofs_);
  if (with_hessian) {
    const double diag = 1.0 / (dt * dt) + config_.damping_coeff / dt;
    jac_.add_diagonal(mass_, diag);
    for (std::size_t d : clamp_dofs_) jac_.isolate_dof(d);
  }
  return inf_norm(r_);
}

StepStats ImplicitStepper::step(Rod& rod, std::span<const Obstacle> obstacles,
                                const ContactConfig& contact) {
  ensure_workspace(rod);
  const double dt = config_.dt;
  q_t_ = rod.state.pack_positions();
  v_t_ = rod.state.pack_velocities();
  force_g_ = gravity_force(rod.rest, config_.gravity, rod.state.num_dofs());

  RodState trial = rod.state;
  clamp_.apply(trial);
  const VecX clamped = trial.pack_positions();
  q_ = clamped + dt * v_t_;
  for (std::size_t d : clamp_dofs_) {
    q_[static_cast<Eigen::Index>(d)] = clamped[static_cast<Eigen::Index>(d)];
  }

  StepStats stats;
  FrameSet frames;
  auto evaluate = [&](bool with_hessian) {
    trial.unpack_positions(q_);
    try {
      frames = time_parallel_transport(rod.frames, compute_tangents(trial), trial.thetas);
    } catch (const Error& e) {
      throw StepFailureError(std::string("frame transport failed: ") + e.what(),
                             stats.residual);
    }
    return residual(rod, frames, trial, obstacles, contact, with_hessian,
                    &stats.max_penetration, &stats.contact_pairs);
  };

  stats.residual = evaluate(true);
  stats.converged = stats.residual < config_.newton_tol;
  while (!stats.converged && stats.newton_iterations < config_.max_newton_iters) {
    // The Newton matrix is symmetric; pivoted LU only when LDL^T meets a
    // vanishing pivot.
    VecX dq;
    if (ldlt_.factorize(jac_)) {
      dq = ldlt_.solve(-r_);
    } else {
      try {
        lu_.factorize(jac_);
      } catch (const SingularMatrixError& e) {
        throw StepFailureError(std::string("Newton system: ") + e.what(), stats.residual);
      }
      dq = lu_.solve(-r_);
    }
    if (!dq.allFinite()) throw StepFailureError("non-finite Newton update", stats.residual);
    ++stats.newton_iterations;
    const bool last = stats.newton_iterations == config_.max_newton_iters;

    if (config_.line_search) {
      // The full step is tried with the Hessian so that an accepted full
      // step needs no second evaluation.
      const VecX base = q_;
      const double r0 = stats.residual;
      double alpha = 1.0;
      bool have_hessian = false;
      for (int halving = 0;; ++halving) {
        q_ = base + alpha * dq;
        have_hessian = !last && halving == 0;
        double r = 0.0;
        try {
          r = evaluate(have_hessian);
        } catch (const StepFailureError&) {
          r = std::numeric_limits<double>::infinity();
        }
        if (r < r0 || halving == 8) {
          stats.residual = r;
          break;
        }
        alpha *= 0.5;
      }
      if (!last && !have_hessian) stats.residual = evaluate(true);
    } else {
      q_ += dq;
      stats.residual = evaluate(!last);
    }
    if (!std::isfinite(stats.residual)) {
      throw StepFailureError("non-finite residual", stats.residual);
    }
    stats.converged = stats.residual < config_.newton_tol;
  }

  rod.state.unpack_positions(q_);
  rod.state.unpack_velocities((q_ - q_t_) / dt);
  clamp_.apply(rod.state);
  rod.frames = std::move(frames);
  return stats;
}

// ---------------------------------------------------------------- explicit

ExplicitStepper::ExplicitStepper(const StepperConfig& config, ClampSpec clamp)
    : config_(config), clamp_(std::move(clamp)), clamp_dofs_(clamp_.dofs()) {
  config_.validate();
}

StepStats ExplicitStepper::step(Rod& rod, std::span<const Obstacle> obstacles,
                                const ContactConfig& contact) {
  const std::size_t n = rod.state.num_dofs();
  if (static_cast<std::size_t>(mass_.size()) != n) {
    mass_ = mass_vector(rod.rest);
    force_.resize(static_cast<Eigen::Index>(n));
  }
  const double dt = config_.dt;
  q_ = rod.state.pack_positions();
  v_ = rod.state.pack_velocities();

  force_.setZero();
  accumulate_elastic(rod.state, rod.frames, rod.rest, {}, &force_, nullptr);
  force_ = -force_;
  force_ -= config_.damping_coeff * mass_.cwiseProduct(v_);
  for (std::size_t i = 0; i < rod.state.num_nodes(); ++i) {
    force_.segment<3>(node_dof(i)) += rod.rest.lumped_masses[i] * config_.gravity;
  }

  StepStats stats;
  stats.newton_iterations = 0;
  if (!obstacles.empty()) {
    pairs_ = detect(rod.state, rod.rest.radius, obstacles, 0.0);
    stats.contact_pairs = pairs_.size();
    stats.max_penetration = max_penetration(pairs_);
    if (!pairs_.empty()) force_ += penalty_force(pairs_, rod.state, contact, force_);
  }

  v_ += dt * force_.cwiseQuotient(mass_);
  zero_entries(v_, clamp_dofs_);
  q_ += dt * v_;

  for (Eigen::Index i = 0; i < q_.size(); ++i) {
    if (!std::isfinite(q_[i]) || !std::isfinite(v_[i]) || std::abs(q_[i]) > kRunaway ||
        std::abs(v_[i]) > kRunaway) {
      throw InstabilityError("explicit step diverged at DOF " + std::to_string(i),
                             static_cast<std::size_t>(i));
    }
  }

  rod.state.unpack_positions(q_);
  rod.state.unpack_velocities(v_);
  clamp_.apply(rod.state);
  try {
    rod.frames = time_parallel_transport(rod.frames, compute_tangents(rod.state),
                                         rod.state.thetas);
  } catch (const Error& e) {
    throw InstabilityError(std::string("frame transport failed: ") + e.what(), 0);
  }
  return stats;
}

}  // namespace softrod
