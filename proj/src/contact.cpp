#include "softrod/contact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "softrod/errors.hpp"

namespace softrod {

namespace {

using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Gradient and Hessian of the center-line distance between edge (p0, p1)
// and the obstacle axis with respect to (p0, p1). Parameters strictly inside
// (0, 1) are eliminated by a Schur complement; clamped ones are constants.
struct DistanceDerivatives {
  double distance;
  Vec3 normal;
  Vec6 grad;
  Mat6 hess;
};

DistanceDerivatives distance_derivatives(const Vec3& p0, const Vec3& p1,
                                         const Obstacle& obs, double u, double v,
                                         bool with_hessian) {
  DistanceDerivatives out;
  const Vec3 edge = p1 - p0;
  const Vec3 axis = obs.b - obs.a;
  const Vec3 w = p0 + u * edge - (obs.a + v * axis);
  const double d = w.norm();
  out.distance = d;
  out.normal = d > 1e-14 ? Vec3(w / d) : Vec3::UnitZ();
  out.grad << (1.0 - u) * out.normal, u * out.normal;
  if (!with_hessian) return out;
  if (!(d > 1e-14)) {
    out.hess.setZero();
    return out;
  }

  // f(x, u, v) = |w|^2.
  Mat6 fxx;
  const Mat3 id = Mat3::Identity();
  fxx << 2.0 * (1.0 - u) * (1.0 - u) * id, 2.0 * u * (1.0 - u) * id,
      2.0 * u * (1.0 - u) * id, 2.0 * u * u * id;

  const bool u_free = u > 0.0 && u < 1.0;
  const bool v_free = obs.kind == Obstacle::Kind::capsule && v > 0.0 && v < 1.0;
  Eigen::Matrix<double, 6, 2> fxp;
  Eigen::Matrix2d fpp;
  fxp.col(0) << 2.0 * ((1.0 - u) * edge - w), 2.0 * (u * edge + w);
  fxp.col(1) << -2.0 * (1.0 - u) * axis, -2.0 * u * axis;
  fpp << 2.0 * edge.squaredNorm(), -2.0 * edge.dot(axis), -2.0 * edge.dot(axis),
      2.0 * axis.squaredNorm();

  Mat6 hd = fxx;
  if (u_free && v_free) {
    const double det = fpp.determinant();
    if (det > 1e-12 * fpp(0, 0) * fpp(1, 1)) {
      hd -= fxp * fpp.inverse() * fxp.transpose();
    } else {
      // Parallel segments: the minimizer is not unique; keep the obstacle
      // parameter fixed.
      hd -= fxp.col(0) * fxp.col(0).transpose() / fpp(0, 0);
    }
  } else if (u_free) {
    hd -= fxp.col(0) * fxp.col(0).transpose() / fpp(0, 0);
  } else if (v_free) {
    hd -= fxp.col(1) * fxp.col(1).transpose() / fpp(1, 1);
  }
  // d = sqrt(D): grad d = grad D / (2d), hess d = hess D / (2d) - grad d grad d^T / d.
  out.hess = hd / (2.0 * d) - out.grad * out.grad.transpose() / d;
  return out;
}

struct Aabb {
  Vec3 lo, hi;
  bool overlaps(const Aabb& o) const {
    return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
  }
};

Aabb segment_box(const Vec3& a, const Vec3& b, double pad) {
  return {a.cwiseMin(b).array() - pad, a.cwiseMax(b).array() + pad};
}

}  // namespace

Obstacle Obstacle::sphere(const Vec3& center, double radius) {
  Obstacle o;
  o.kind = Kind::sphere;
  o.a = center;
  o.b = center;
  o.radius = radius;
  o.validate();
  return o;
}

Obstacle Obstacle::capsule(const Vec3& endpoint_a, const Vec3& endpoint_b,
                           double radius) {
  Obstacle o;
  o.kind = Kind::capsule;
  o.a = endpoint_a;
  o.b = endpoint_b;
  o.radius = radius;
  o.validate();
  return o;
}

void Obstacle::validate() const {
  if (!(radius > 0.0)) throw InvalidParameterError("obstacle radius must be positive");
  if (!a.allFinite() || !b.allFinite()) {
    throw InvalidParameterError("obstacle coordinates must be finite");
  }
  if (kind == Kind::capsule && (b - a).norm() < 1e-12) {
    throw InvalidParameterError("capsule endpoints must be distinct");
  }
}

void ContactConfig::validate() const {
  if (!(stiffness > 0.0) || !(delta > 0.0) || !(damping >= 0.0)) {
    throw InvalidParameterError("contact stiffness and delta must be positive");
  }
}

SegmentClosest closest_segment_segment(const Vec3& p0, const Vec3& p1,
                                       const Vec3& q0, const Vec3& q1) {
  // Clamped two-parameter minimization (Ericson, Real-Time Collision
  // Detection, 5.1.9).
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double eps = 1e-24;
  double s = 0.0;
  double t = 0.0;
  if (a <= eps && e <= eps) {
    s = t = 0.0;
  } else if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 1e-14 * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  SegmentClosest out;
  out.s = s;
  out.t = t;
  out.distance = ((p0 + s * d1) - (q0 + t * d2)).norm();
  return out;
}

std::vector<ContactPair> detect(const RodState& state, double rod_radius,
                                std::span<const Obstacle> obstacles,
                                double cutoff) {
  std::vector<ContactPair> pairs;
  if (obstacles.empty()) return pairs;
  std::vector<Aabb> boxes;
  boxes.reserve(obstacles.size());
  for (const Obstacle& o : obstacles) boxes.push_back(segment_box(o.a, o.b, o.radius));

  for (std::size_t j = 0; j < state.num_edges(); ++j) {
    const Vec3& p0 = state.positions[j];
    const Vec3& p1 = state.positions[j + 1];
    const Aabb edge_box = segment_box(p0, p1, rod_radius + cutoff);
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      if (!edge_box.overlaps(boxes[k])) continue;
      const Obstacle& o = obstacles[k];
      const SegmentClosest c = closest_segment_segment(p0, p1, o.a, o.b);
      const double gap = c.distance - rod_radius - o.radius;
      if (gap >= cutoff) continue;
      ContactPair pair;
      pair.edge_index = j;
      pair.obstacle_index = k;
      pair.rod_param = c.s;
      pair.obstacle_param = c.t;
      pair.gap = gap;
      const Vec3 w = (p0 + c.s * (p1 - p0)) - (o.a + c.t * (o.b - o.a));
      pair.normal = c.distance > 1e-14 ? Vec3(w / c.distance) : Vec3::UnitZ();
      pairs.push_back(pair);
    }
  }
  return pairs;
}

ImcScalar imc_pair_energy(double gap, const ContactConfig& config) {
  const double k_sharp = config.sharpness();
  const double x = -k_sharp * gap;
  const double s = softplus(x) / k_sharp;
  const double sig = sigmoid(x);
  ImcScalar out;
  out.energy = config.stiffness * s * s;
  out.d_gap = -2.0 * config.stiffness * s * sig;
  out.d2_gap = 2.0 * config.stiffness * (sig * sig + s * k_sharp * sig * (1.0 - sig));
  return out;
}

double accumulate_imc(std::span<const ContactPair> pairs, const RodState& state,
                      double rod_radius, std::span<const Obstacle> obstacles,
                      const ContactConfig& config, VecX* gradient,
                      BandedMatrix* hessian, bool project_hessian) {
  double energy = 0.0;
  for (const ContactPair& pair : pairs) {
    const std::size_t j = pair.edge_index;
    const Obstacle& obs = obstacles[pair.obstacle_index];
    const DistanceDerivatives dd =
        distance_derivatives(state.positions[j], state.positions[j + 1], obs,
                             pair.rod_param, pair.obstacle_param, hessian != nullptr);
    const double gap = dd.distance - rod_radius - obs.radius;
    const ImcScalar e = imc_pair_energy(gap, config);
    energy += e.energy;
    const std::size_t a = node_dof(j);
    const std::size_t b = node_dof(j + 1);
    if (gradient) {
      gradient->segment<3>(a) += e.d_gap * dd.grad.head<3>();
      gradient->segment<3>(b) += e.d_gap * dd.grad.tail<3>();
    }
    if (hessian) {
      Mat6 h = e.d2_gap * dd.grad * dd.grad.transpose() + e.d_gap * dd.hess;
      if (project_hessian) {
        Eigen::SelfAdjointEigenSolver<Mat6> es(h);
        if (es.eigenvalues().minCoeff() < 0.0) {
          h = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
              es.eigenvectors().transpose();
        }
      }
      const std::size_t dofs[6] = {a, a + 1, a + 2, b, b + 1, b + 2};
      hessian->add_block(dofs, 6, h);
    }
  }
  return energy;
}

ContactEnergy imc_force(std::span<const ContactPair> pairs, const RodState& state,
                        double rod_radius, std::span<const Obstacle> obstacles,
                        const ContactConfig& config, bool with_hessian) {
  config.validate();
  ContactEnergy out;
  const std::size_t n = state.num_dofs();
  out.gradient = VecX::Zero(static_cast<Eigen::Index>(n));
  if (with_hessian) out.hessian = BandedMatrix(n, kRodHalfBandwidth);
  out.energy = accumulate_imc(pairs, state, rod_radius, obstacles, config,
                              &out.gradient, with_hessian ? &out.hessian : nullptr);
  return out;
}

VecX penalty_force(std::span<const ContactPair> pairs, const RodState& state,
                   const ContactConfig& config, const VecX& other_forces) {
  VecX force = VecX::Zero(static_cast<Eigen::Index>(state.num_dofs()));
  for (const ContactPair& pair : pairs) {
    if (pair.gap >= 0.0) continue;  // Heaviside gate on penetration
    const std::size_t j = pair.edge_index;
    const double u = pair.rod_param;
    const Vec3& n = pair.normal;
    const std::size_t a = node_dof(j);
    const std::size_t b = node_dof(j + 1);
    const Vec3 applied =
        (1.0 - u) * other_forces.segment<3>(a) + u * other_forces.segment<3>(b);
    const double pressing = std::min(0.0, applied.dot(n));  // F_perp
    const Vec3 v = (1.0 - u) * state.velocities[j] + u * state.velocities[j + 1];
    const double damping = -config.damping * v.dot(n);
    const double magnitude =
        std::max(0.0, -pressing + config.stiffness * (-pair.gap) + damping);
    force.segment<3>(a) += (1.0 - u) * magnitude * n;
    force.segment<3>(b) += u * magnitude * n;
  }
  return force;
}

double max_penetration(std::span<const ContactPair> pairs) {
  double worst = 0.0;
  for (const ContactPair& p : pairs) worst = std::max(worst, -p.gap);
  return worst;
}

}  // namespace softrod
