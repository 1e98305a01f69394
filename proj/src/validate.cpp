#include "softrod/validate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "softrod/banded.hpp"
#include "softrod/contact.hpp"
#include "softrod/errors.hpp"

namespace softrod {

namespace {

constexpr double kElasticStep = 1e-6;
constexpr double kContactStep = 1e-7;

double rel_inf(const VecX& approx, const VecX& exact) {
  const double scale = std::max(exact.cwiseAbs().maxCoeff(), 1e-8);
  return (approx - exact).cwiseAbs().maxCoeff() / scale;
}

// Energy as a function of the packed DOFs, with frames transported from the
// base state's frames.
double energy_at(const EnergyFunction& fn, const Rod& base, const VecX& q) {
  RodState s = base.state;
  s.unpack_positions(q);
  const FrameSet f = time_parallel_transport(base.frames, compute_tangents(s), s.thetas);
  return fn(s, f, base.rest, false).energy;
}

VecX fd_gradient(const EnergyFunction& fn, const Rod& base) {
  const VecX q = base.state.pack_positions();
  VecX g(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    VecX qp = q, qm = q;
    qp[i] += kElasticStep;
    qm[i] -= kElasticStep;
    g[i] = (energy_at(fn, base, qp) - energy_at(fn, base, qm)) / (2.0 * kElasticStep);
  }
  return g;
}

ElasticResult hooked_elastic(const EnergyHooks& h, const RodState& s, const FrameSet& f,
                             const RestConfig& r, bool hess) {
  ElasticResult out = h.stretch(s, f, r, hess);
  for (const EnergyFunction* fn : {&h.bend, &h.twist}) {
    const ElasticResult e = (*fn)(s, f, r, hess);
    out.energy += e.energy;
    out.gradient += e.gradient;
    if (hess) out.hessian += e.hessian;
  }
  return out;
}

VecX elastic_gradient_at(const EnergyHooks& h, const Rod& base, const VecX& q) {
  RodState s = base.state;
  s.unpack_positions(q);
  const FrameSet f = time_parallel_transport(base.frames, compute_tangents(s), s.thetas);
  return hooked_elastic(h, s, f, base.rest, false).gradient;
}

struct ContactScene {
  Rod rod;
  std::vector<Obstacle> obstacles;
};

// One obstacle placed against a random edge with a surface gap in
// [gap_lo, gap_hi].
ContactScene contact_scene(std::mt19937_64& rng, double gap_lo, double gap_hi) {
  ContactScene sc{random_rod(rng()), {}};
  const RodState& s = sc.rod.state;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> nrm;
  const std::size_t j = 2 + static_cast<std::size_t>(u01(rng) * (s.num_edges() - 4));
  const Vec3 p = s.positions[j] + u01(rng) * 0.8 * (s.positions[j + 1] - s.positions[j]) +
                 0.1 * (s.positions[j + 1] - s.positions[j]);
  const Vec3 t = (s.positions[j + 1] - s.positions[j]).normalized();
  Vec3 n(nrm(rng), nrm(rng), nrm(rng));
  n = (n - n.dot(t) * t).normalized();
  const double radius = 0.03 + 0.05 * u01(rng);
  const double gap = gap_lo + (gap_hi - gap_lo) * u01(rng);
  const Vec3 c = p - n * (sc.rod.rest.radius + radius + gap);
  if (u01(rng) < 0.5) {
    sc.obstacles.push_back(Obstacle::sphere(c, radius));
  } else {
    Vec3 a(nrm(rng), nrm(rng), nrm(rng));
    a = (a - a.dot(n) * n).normalized();
    const double half = 0.02 + 0.1 * u01(rng);
    sc.obstacles.push_back(Obstacle::capsule(c - half * a, c + half * a, radius));
  }
  return sc;
}

double contact_energy_at(const ContactScene& sc, const ContactConfig& cfg, const VecX& q) {
  RodState s = sc.rod.state;
  s.unpack_positions(q);
  const auto pairs = detect(s, sc.rod.rest.radius, sc.obstacles, 10.0);
  return imc_force(pairs, s, sc.rod.rest.radius, sc.obstacles, cfg, false).energy;
}

ContactEnergy contact_at(const ContactScene& sc, const ContactConfig& cfg, const VecX& q,
                         bool with_hessian) {
  RodState s = sc.rod.state;
  s.unpack_positions(q);
  const auto pairs = detect(s, sc.rod.rest.radius, sc.obstacles, 10.0);
  return imc_force(pairs, s, sc.rod.rest.radius, sc.obstacles, cfg, with_hessian);
}

// Position DOFs of the edges touched by the scene's contact pairs.
std::vector<Eigen::Index> contact_dofs(const ContactScene& sc) {
  const auto pairs = detect(sc.rod.state, sc.rod.rest.radius, sc.obstacles, 10.0);
  std::vector<Eigen::Index> dofs;
  for (const ContactPair& p : pairs) {
    for (std::size_t node : {p.edge_index, p.edge_index + 1}) {
      for (std::size_t k = 0; k < 3; ++k) {
        dofs.push_back(static_cast<Eigen::Index>(node_dof(node) + k));
      }
    }
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

CheckResult make_check(std::string name, double err, double tol) {
  return {std::move(name), err, tol, std::isfinite(err) && err < tol};
}

// Builds a rod whose nodes lie on a circle with turning angle phi per edge.
RodState arc_state(double phi, std::size_t n_nodes) {
  RodState s;
  const double radius = 1.0;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const double a = phi * static_cast<double>(i);
    s.positions.emplace_back(radius * std::sin(a), 0.0, radius * (1.0 - std::cos(a)));
  }
  s.thetas.assign(n_nodes - 1, 0.0);
  s.velocities.assign(n_nodes, Vec3::Zero());
  s.theta_rates.assign(n_nodes - 1, 0.0);
  return s;
}

}  // namespace

EnergyHooks EnergyHooks::library() {
  EnergyHooks h;
  h.stretch = [](const RodState& s, const FrameSet&, const RestConfig& r, bool hess) {
    return stretch_energy(s, r, hess);
  };
  h.bend = [](const RodState& s, const FrameSet& f, const RestConfig& r, bool hess) {
    return bend_energy(s, f, r, hess);
  };
  h.twist = [](const RodState& s, const FrameSet& f, const RestConfig& r, bool hess) {
    return twist_energy(s, f, r, hess);
  };
  return h;
}

bool ValidateReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* ValidateReport::find(const std::string& name) const {
  for (const CheckResult& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Rod random_rod(std::uint64_t seed, std::size_t n_nodes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nrm;
  RodParams p;
  p.n_nodes = n_nodes;
  Rod rod = build_rod(p);
  for (int pass = 0; pass < 5; ++pass) {
    for (Vec3& x : rod.state.positions) x += 0.004 * Vec3(nrm(rng), nrm(rng), nrm(rng));
    for (double& th : rod.state.thetas) th += 0.1 * nrm(rng);
    rod.frames = time_parallel_transport(rod.frames, compute_tangents(rod.state),
                                         rod.state.thetas);
  }
  for (Vec2& k : rod.rest.nat_curvature) k = 0.05 * Vec2(nrm(rng), nrm(rng));
  for (double& t : rod.rest.nat_twist) t = 0.05 * nrm(rng);
  for (Vec3& v : rod.state.velocities) v = 0.1 * Vec3(nrm(rng), nrm(rng), nrm(rng));
  return rod;
}

ValidateReport run_validation(const ValidateOptions& o) {
  ValidateReport report;
  std::mt19937_64 rng(o.seed);
  const EnergyHooks& h = o.hooks;

  // Energy gradients.
  struct Term {
    const char* name;
    const EnergyFunction* fn;
  };
  for (const Term& term : {Term{"stretch_energy", &h.stretch}, Term{"bend_energy", &h.bend},
                           Term{"twist_energy", &h.twist}}) {
    double worst = 0.0;
    std::mt19937_64 local(o.seed);
    for (int k = 0; k < o.n_states; ++k) {
      const Rod rod = random_rod(local());
      const VecX g = (*term.fn)(rod.state, rod.frames, rod.rest, false).gradient;
      worst = std::max(worst, rel_inf(fd_gradient(*term.fn, rod), g));
    }
    report.checks.push_back(make_check(term.name, worst, o.gradient_tol));
  }

  // Elastic Hessian against differences of the analytic gradient.
  {
    double worst = 0.0;
    double asym = 0.0;
    for (int k = 0; k < o.n_states; ++k) {
      const Rod rod = random_rod(rng());
      const ElasticResult res = hooked_elastic(h, rod.state, rod.frames, rod.rest, true);
      const Eigen::MatrixXd hd = res.hessian.to_dense();
      asym = std::max(asym, res.hessian.asymmetry());
      const VecX q = rod.state.pack_positions();
      Eigen::MatrixXd fd(q.size(), q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        VecX qp = q, qm = q;
        qp[i] += kElasticStep;
        qm[i] -= kElasticStep;
        fd.col(i) = (elastic_gradient_at(h, rod, qp) - elastic_gradient_at(h, rod, qm)) /
                    (2.0 * kElasticStep);
      }
      const Eigen::MatrixXd sym = 0.5 * (fd + fd.transpose());
      worst = std::max(worst, (sym - hd).cwiseAbs().maxCoeff() /
                                  std::max(hd.cwiseAbs().maxCoeff(), 1e-8));
    }
    report.checks.push_back(make_check("elastic_hessian", worst, o.hessian_tol));
    report.checks.push_back(make_check("hessian_symmetry", asym, 1e-9));
  }

  // Contact gradient and Hessian, near and across the gap = 0 crossing.
  {
    ContactConfig cfg;
    double grad_worst = 0.0;
    double hess_worst = 0.0;
    double cross_worst = 0.0;
    for (int k = 0; k < o.n_states; ++k) {
      const bool crossing = k % 4 == 0;
      const ContactScene sc = crossing ? contact_scene(rng, -1e-5, 1e-5)
                                       : contact_scene(rng, -cfg.delta, 2.0 * cfg.delta);
      const VecX q = sc.rod.state.pack_positions();
      const ContactEnergy base = contact_at(sc, cfg, q, true);
      const Eigen::MatrixXd hd = base.hessian.to_dense();
      const auto dofs = contact_dofs(sc);
      VecX g_fd(static_cast<Eigen::Index>(dofs.size()));
      VecX g_an(static_cast<Eigen::Index>(dofs.size()));
      Eigen::MatrixXd h_fd(g_fd.size(), g_fd.size());
      Eigen::MatrixXd h_an(g_fd.size(), g_fd.size());
      for (std::size_t a = 0; a < dofs.size(); ++a) {
        const Eigen::Index i = dofs[a];
        VecX qp = q, qm = q;
        qp[i] += kContactStep;
        qm[i] -= kContactStep;
        g_fd[static_cast<Eigen::Index>(a)] =
            (contact_energy_at(sc, cfg, qp) - contact_energy_at(sc, cfg, qm)) /
            (2.0 * kContactStep);
        g_an[static_cast<Eigen::Index>(a)] = base.gradient[i];
        const VecX dg = (contact_at(sc, cfg, qp, false).gradient -
                         contact_at(sc, cfg, qm, false).gradient) /
                        (2.0 * kContactStep);
        for (std::size_t b = 0; b < dofs.size(); ++b) {
          h_fd(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = dg[dofs[b]];
          h_an(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = hd(dofs[b], i);
        }
      }
      const double ge = rel_inf(g_fd, g_an);
      (crossing ? cross_worst : grad_worst) = std::max(crossing ? cross_worst : grad_worst, ge);
      hess_worst = std::max(hess_worst, (h_fd - h_an).cwiseAbs().maxCoeff() /
                                            std::max(h_an.cwiseAbs().maxCoeff(), 1e-8));
    }
    report.checks.push_back(make_check("contact_gradient", grad_worst, o.contact_tol));
    report.checks.push_back(make_check("contact_smoothness", cross_worst, o.contact_tol));
    report.checks.push_back(make_check("contact_hessian", hess_worst, o.hessian_tol));
  }

  // Frame orthonormality after many random transports.
  {
    Rod rod = random_rod(rng());
    std::normal_distribution<double> nrm;
    double worst = 0.0;
    const int transports = 10000;
    for (int k = 0; k < transports; ++k) {
      for (std::size_t i = 2; i < rod.state.num_nodes(); ++i) {
        rod.state.positions[i] += 0.002 * Vec3(nrm(rng), nrm(rng), nrm(rng));
      }
      for (double& th : rod.state.thetas) th += 0.05 * nrm(rng);
      // Keep the rod near its rest length so edges never collapse.
      for (std::size_t i = 1; i < rod.state.num_nodes(); ++i) {
        const Vec3 e = rod.state.positions[i] - rod.state.positions[i - 1];
        rod.state.positions[i] = rod.state.positions[i - 1] + e.normalized() * rod.rest.rest_lengths[i - 1];
      }
      rod.frames = time_parallel_transport(rod.frames, compute_tangents(rod.state),
                                           rod.state.thetas);
      const FrameSet& f = rod.frames;
      for (std::size_t j = 0; j < f.tangents.size(); ++j) {
        for (const auto& [a, b, c] : {std::tuple{f.ref_d1[j], f.ref_d2[j], f.tangents[j]},
                                      std::tuple{f.mat_m1[j], f.mat_m2[j], f.tangents[j]}}) {
          worst = std::max({worst, std::abs(a.dot(b)), std::abs(a.dot(c)), std::abs(b.dot(c)),
                            std::abs(a.norm() - 1.0), std::abs(b.norm() - 1.0),
                            std::abs(c.norm() - 1.0), (a.cross(b) - c).norm()});
        }
      }
    }
    report.checks.push_back(make_check("frame_orthonormality", worst, o.frame_tol));
  }

  // Banded LU against a dense LU on random diagonally dominant systems.
  {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const std::size_t n = 83;
      BandedMatrix a(n, kRodHalfBandwidth);
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = i > 10 ? i - 10 : 0; j <= std::min(n - 1, i + 10); ++j) {
          if (j == i) continue;
          const double v = u(rng);
          a.at(i, j) = v;
          row += std::abs(v);
        }
        a.at(i, i) = row + 1.0;
      }
      VecX b(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
      const VecX x = solve_banded(a, b);
      const VecX xd = a.to_dense().partialPivLu().solve(b);
      worst = std::max(worst, rel_inf(x, xd));
    }
    report.checks.push_back(make_check("banded_solver", worst, o.solver_tol));
  }

  // Curvature binormal on circular arcs: |kb| = 2 tan(phi / 2).
  {
    double worst = 0.0;
    for (double deg : {5.0, 30.0, 90.0}) {
      const double phi = deg * std::numbers::pi / 180.0;
      const RodState s = arc_state(phi, 5);
      for (const Vec3& kb : curvature_binormals(compute_tangents(s))) {
        worst = std::max(worst, std::abs(kb.norm() - 2.0 * std::tan(phi / 2.0)));
      }
    }
    report.checks.push_back(make_check("curvature_oracle", worst, o.curvature_tol));
  }
  return report;
}

}  // namespace softrod
