#include "softrod/elasticity.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>

#include "softrod/errors.hpp"

namespace softrod {

namespace {

using Mat3 = Eigen::Matrix3d;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat11 = Eigen::Matrix<double, 11, 11>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec11 = Eigen::Matrix<double, 11, 1>;


template <typename T>
using V3 = Eigen::Matrix<T, 3, 1>;

struct StencilConstants {
  Vec2 kappa_bar;
  double psi_bar = 0.0;
  double bend_coeff = 0.0;   // K_b / V
  double twist_coeff = 0.0;  // K_t / V
};

// Gradient of the bend/twist energy of one stencil in edge coordinates
// (e_prev, e_next, theta_prev, theta_next).
template <typename T>
Eigen::Matrix<T, 8, 1> stencil_gradient(const V3<T>& ea, const V3<T>& eb,
                                        const V3<T>& m1a, const V3<T>& m2a,
                                        const V3<T>& m1b, const V3<T>& m2b,
                                        const T& psi,
                                        const StencilConstants& c, bool bend,
                                        bool twist) {
  using std::sqrt;
  const T la = sqrt(ea.dot(ea));
  const T lb = sqrt(eb.dot(eb));
  const V3<T> ta = ea / la;
  const V3<T> tb = eb / lb;
  const T chi = T(1.0) + ta.dot(tb);
  const V3<T> kb = ta.cross(tb) * (T(2.0) / chi);

  Eigen::Matrix<T, 8, 1> g;
  g.setZero();
  if (bend) {
    const V3<T> tilde_t = (ta + tb) / chi;
    const V3<T> tilde_m1 = (m1a + m1b) / chi;
    const V3<T> tilde_m2 = (m2a + m2b) / chi;
    const T k1 = T(0.5) * kb.dot(m2a + m2b);
    const T k2 = T(0.5) * kb.dot(m1a + m1b);
    const T r1 = (k1 - T(c.kappa_bar[0])) * T(c.bend_coeff);
    const T r2 = (k2 - T(c.kappa_bar[1])) * T(c.bend_coeff);

    const V3<T> dk1_da = (tb.cross(tilde_m2) - tilde_t * k1) / la;
    const V3<T> dk1_db = (-ta.cross(tilde_m2) - tilde_t * k1) / lb;
    const V3<T> dk2_da = (tb.cross(tilde_m1) - tilde_t * k2) / la;
    const V3<T> dk2_db = (-ta.cross(tilde_m1) - tilde_t * k2) / lb;
    g.template segment<3>(0) += dk1_da * r1 + dk2_da * r2;
    g.template segment<3>(3) += dk1_db * r1 + dk2_db * r2;
    g[6] += r1 * (T(-0.5) * kb.dot(m1a)) + r2 * (T(0.5) * kb.dot(m2a));
    g[7] += r1 * (T(-0.5) * kb.dot(m1b)) + r2 * (T(0.5) * kb.dot(m2b));
  }
  if (twist) {
    const T tau = (psi - T(c.psi_bar)) * T(c.twist_coeff);
    g.template segment<3>(0) += kb * (tau / (T(2.0) * la));
    g.template segment<3>(3) += kb * (tau / (T(2.0) * lb));
    g[6] -= tau;
    g[7] += tau;
  }
  return g;
}

struct StencilInput {
  Vec3 ea, eb, m1a, m2a, m1b, m2b;
  double psi;
};

using Row8 = Eigen::Matrix<double, 1, 8>;
using Mat38 = Eigen::Matrix<double, 3, 8>;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Geometric quantities of one stencil and their first variations in edge
// coordinates (e_prev, e_next, theta_prev, theta_next).
struct StencilGeometry {
  double la, lb, chi;
  Vec3 ta, tb, kb, tilde_t;
  Mat38 dta, dtb, dkb, dtilde_t;
  Row8 dchi;

  explicit StencilGeometry(const StencilInput& in) {
    la = in.ea.norm();
    lb = in.eb.norm();
    ta = in.ea / la;
    tb = in.eb / lb;
    chi = 1.0 + ta.dot(tb);
    kb = 2.0 * ta.cross(tb) / chi;
    tilde_t = (ta + tb) / chi;
    dta.setZero();
    dtb.setZero();
    dta.block<3, 3>(0, 0) = (Mat3::Identity() - ta * ta.transpose()) / la;
    dtb.block<3, 3>(0, 3) = (Mat3::Identity() - tb * tb.transpose()) / lb;
    // dta lives in columns 0-2 and dtb in columns 3-5.
    dchi.setZero();
    dchi.segment<3>(0) = tb.transpose() * dta.block<3, 3>(0, 0);
    dchi.segment<3>(3) = ta.transpose() * dtb.block<3, 3>(0, 3);
    dkb = -kb * dchi / chi;
    dkb.block<3, 3>(0, 0) -= (2.0 / chi) * skew(tb) * dta.block<3, 3>(0, 0);
    dkb.block<3, 3>(0, 3) += (2.0 / chi) * skew(ta) * dtb.block<3, 3>(0, 3);
    dtilde_t = (dta + dtb) / chi - tilde_t * dchi / chi;
  }
};

// Variation of a material director v attached to edge `edge` (0 = prev,
// 1 = next) under time-parallel transport: dv = -(v . dt) t, plus rotation
// by d(theta) about t, where `rot` = t x v.
Mat38 director_variation(const Vec3& v, const Vec3& rot, const Vec3& t, double len,
                         int edge) {
  Mat38 d = Mat38::Zero();
  d.block<3, 3>(0, 3 * edge) = -t * v.transpose() / len;
  d.col(6 + edge) = rot;
  return d;
}

// Gradient (8) of kappa = kb . (pa + pb) / 2, where qa = dpa/dtheta_prev
// and qb = dpb/dtheta_next.
Vec8 curvature_gradient(const StencilGeometry& g, const Vec3& pa, const Vec3& qa,
                        const Vec3& pb, const Vec3& qb, double& kappa) {
  const Vec3 psum = pa + pb;
  kappa = 0.5 * g.kb.dot(psum);
  const Vec3 tilde_p = psum / g.chi;
  Vec8 grad;
  grad.segment<3>(0) = (-kappa * g.tilde_t + g.tb.cross(tilde_p)) / g.la;
  grad.segment<3>(3) = (-kappa * g.tilde_t - g.ta.cross(tilde_p)) / g.lb;
  grad[6] = 0.5 * g.kb.dot(qa);
  grad[7] = 0.5 * g.kb.dot(qb);
  return grad;
}

// Jacobian (8x8) of the curvature gradient above. Both are linear in the
// directors, so a weighted sum of curvature Jacobians is one call with the
// weighted directors.
Mat8 curvature_jacobian(const StencilGeometry& g, const Vec3& pa, const Vec3& qa,
                        const Vec3& pb, const Vec3& qb) {
  double kappa;
  const Vec8 grad = curvature_gradient(g, pa, qa, pb, qb, kappa);
  const Mat38 dpa = director_variation(pa, qa, g.ta, g.la, 0);
  const Mat38 dpb = director_variation(pb, qb, g.tb, g.lb, 1);

  const Vec3 psum = pa + pb;
  const Vec3 tilde_p = psum / g.chi;
  const Mat38 dtilde_p = (dpa + dpb) / g.chi - tilde_p * g.dchi / g.chi;
  const Vec3 a = grad.segment<3>(0) * g.la;
  const Vec3 b = grad.segment<3>(3) * g.lb;

  const Mat3 skew_p = skew(tilde_p);
  const Mat38 common = -g.tilde_t * grad.transpose() - kappa * g.dtilde_t;
  // dta is nonzero in columns 0-2 only, dtb in columns 3-5 only.
  Mat38 da = common + skew(g.tb) * dtilde_p;
  Mat38 db = common - skew(g.ta) * dtilde_p;
  da.block<3, 3>(0, 3) -= skew_p * g.dtb.block<3, 3>(0, 3);
  db.block<3, 3>(0, 0) += skew_p * g.dta.block<3, 3>(0, 0);
  da /= g.la;
  db /= g.lb;
  da.block<3, 3>(0, 0) -= a * g.ta.transpose() / (g.la * g.la);
  db.block<3, 3>(0, 3) -= b * g.tb.transpose() / (g.lb * g.lb);
  Mat8 jac;
  jac.block<3, 8>(0, 0) = da;
  jac.block<3, 8>(3, 0) = db;
  // d(qa)/dq = variation of qa with rotation -pa (qa is a quarter turn of pa).
  jac.row(6) = 0.5 * qa.transpose() * g.dkb;
  jac.row(7) = 0.5 * qb.transpose() * g.dkb;
  jac.block<1, 3>(6, 0) -= 0.5 * g.kb.dot(g.ta) * qa.transpose() / g.la;
  jac(6, 6) -= 0.5 * g.kb.dot(pa);
  jac.block<1, 3>(7, 3) -= 0.5 * g.kb.dot(g.tb) * qb.transpose() / g.lb;
  jac(7, 7) -= 0.5 * g.kb.dot(pb);
  return jac;
}

// Hessian of the bend and twist energies of one stencil in edge coordinates.
// The Jacobian of the gradient evaluated with transported frames differs
// from the energy Hessian by an antisymmetric holonomy term, so the
// symmetric part is returned.
Mat8 stencil_hessian(const StencilInput& in, const StencilConstants& c,
                     bool bend, bool twist, Vec8* gradient) {
  const StencilGeometry g(in);
  Mat8 jac = Mat8::Zero();
  Vec8 grad = Vec8::Zero();
  if (bend) {
    double k1, k2;
    // kappa_1 uses m2 (dm2/dtheta = -m1); kappa_2 uses m1 (dm1/dtheta = m2).
    const Vec8 g1 = curvature_gradient(g, in.m2a, -in.m1a, in.m2b, -in.m1b, k1);
    const Vec8 g2 = curvature_gradient(g, in.m1a, in.m2a, in.m1b, in.m2b, k2);
    const double r1 = c.bend_coeff * (k1 - c.kappa_bar[0]);
    const double r2 = c.bend_coeff * (k2 - c.kappa_bar[1]);
    jac.noalias() += c.bend_coeff * (g1 * g1.transpose() + g2 * g2.transpose());
    jac += curvature_jacobian(g, r1 * in.m2a + r2 * in.m1a, r2 * in.m2a - r1 * in.m1a,
                              r1 * in.m2b + r2 * in.m1b, r2 * in.m2b - r1 * in.m1b);
    grad += r1 * g1 + r2 * g2;
  }
  if (twist) {
    Vec8 gpsi;
    gpsi << g.kb / (2.0 * g.la), g.kb / (2.0 * g.lb), -1.0, 1.0;
    Mat8 jpsi = Mat8::Zero();
    jpsi.block<3, 8>(0, 0) = g.dkb / (2.0 * g.la);
    jpsi.block<3, 3>(0, 0) -= g.kb * g.ta.transpose() / (2.0 * g.la * g.la);
    jpsi.block<3, 8>(3, 0) = g.dkb / (2.0 * g.lb);
    jpsi.block<3, 3>(3, 3) -= g.kb * g.tb.transpose() / (2.0 * g.lb * g.lb);
    const double tau = c.twist_coeff * (in.psi - c.psi_bar);
    jac += c.twist_coeff * gpsi * gpsi.transpose() + tau * jpsi;
    grad += tau * gpsi;
  }
  if (gradient) *gradient = grad;
  return 0.5 * (jac + jac.transpose());
}

// Local stencil DOFs: [x_{i-1}, theta_{i-1}, x_i, theta_i, x_{i+1}].
// e_prev = x_i - x_{i-1}, e_next = x_{i+1} - x_i.
Vec11 edge_to_node_gradient(const Vec8& g) {
  Vec11 out;
  out.segment<3>(0) = -g.segment<3>(0);
  out[3] = g[6];
  out.segment<3>(4) = g.segment<3>(0) - g.segment<3>(3);
  out[7] = g[7];
  out.segment<3>(8) = g.segment<3>(3);
  return out;
}

Mat11 edge_to_node_hessian(const Mat8& h) {
  // x_{i-1} -> -e_prev; x_i -> e_prev - e_next; x_{i+1} -> e_next.
  const Mat3 hee = h.block<3, 3>(0, 0);
  const Mat3 hef = h.block<3, 3>(0, 3);
  const Mat3 hff = h.block<3, 3>(3, 3);
  const Eigen::Matrix<double, 3, 2> het = h.block<3, 2>(0, 6);
  const Eigen::Matrix<double, 3, 2> hft = h.block<3, 2>(3, 6);
  Mat11 out;
  out.block<3, 3>(0, 0) = hee;
  out.block<3, 3>(0, 4) = hef - hee;
  out.block<3, 3>(0, 8) = -hef;
  out.block<3, 3>(4, 4) = hee - hef - hef.transpose() + hff;
  out.block<3, 3>(4, 8) = hef - hff;
  out.block<3, 3>(8, 8) = hff;
  out.block<3, 3>(4, 0) = out.block<3, 3>(0, 4).transpose();
  out.block<3, 3>(8, 0) = out.block<3, 3>(0, 8).transpose();
  out.block<3, 3>(8, 4) = out.block<3, 3>(4, 8).transpose();
  const Eigen::Matrix<double, 3, 2> xa = -het;
  const Eigen::Matrix<double, 3, 2> xi = het - hft;
  const Eigen::Matrix<double, 3, 2> xb = hft;
  const int node_rows[3] = {0, 4, 8};
  const Eigen::Matrix<double, 3, 2>* blocks[3] = {&xa, &xi, &xb};
  const int theta_cols[2] = {3, 7};
  for (int n = 0; n < 3; ++n) {
    for (int t = 0; t < 2; ++t) {
      out.block<3, 1>(node_rows[n], theta_cols[t]) = blocks[n]->col(t);
      out.block<1, 3>(theta_cols[t], node_rows[n]) = blocks[n]->col(t).transpose();
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int b2 = 0; b2 < 2; ++b2) out(theta_cols[a], theta_cols[b2]) = h(6 + a, 6 + b2);
  }
  return out;
}

template <int N>
void project_psd(Eigen::Matrix<double, N, N>& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(h);
  auto evals = es.eigenvalues();
  if (evals.minCoeff() >= 0.0) return;
  for (int i = 0; i < N; ++i) evals[i] = std::max(evals[i], 0.0);
  h = es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
}

void check_sizes(const RodState& state, const RestConfig& rest) {
  const std::size_t n = state.num_nodes();
  if (n < 3) throw InvalidParameterError("rod needs at least 3 nodes");
  if (rest.rest_lengths.size() != n - 1 || rest.voronoi_lengths.size() != n - 2 ||
      rest.nat_curvature.size() != n - 2 || rest.nat_twist.size() != n - 2) {
    throw InvalidParameterError("rest configuration does not match rod size");
  }
}

double accumulate_stretch(const RodState& state, const RestConfig& rest,
                          VecX* gradient, BandedMatrix* hessian,
                          const ElasticOptions& options) {
  double energy = 0.0;
  const double ks = rest.stretch_stiffness;
  for (std::size_t j = 0; j < state.num_edges(); ++j) {
    const Vec3 e = state.positions[j + 1] - state.positions[j];
    const double len = e.norm();
    if (!(len > kDegenerateEdgeLength)) throw DegenerateEdgeError(j, len);
    const double rl = rest.rest_lengths[j];
    const double strain = len / rl - 1.0;
    energy += 0.5 * ks * strain * strain * rl;
    const double coeff = 1.0 / rl - 1.0 / len;
    if (gradient) {
      const Vec3 g = ks * coeff * e;
      gradient->segment<3>(node_dof(j)) -= g;
      gradient->segment<3>(node_dof(j + 1)) += g;
    }
    if (hessian) {
      const double lateral = options.project_hessian ? std::max(coeff, 0.0) : coeff;
      const Mat3 h = ks * (lateral * Mat3::Identity() +
                           e * e.transpose() / (len * len * len));
      const std::size_t a = node_dof(j);
      const std::size_t b = node_dof(j + 1);
      const std::size_t dofs[6] = {a, a + 1, a + 2, b, b + 1, b + 2};
      Eigen::Matrix<double, 6, 6> block;
      block << h, -h, -h, h;
      hessian->add_block(dofs, 6, block);
    }
  }
  return energy;
}

double accumulate_bend_twist(const RodState& state, const FrameSet& frames,
                             const RestConfig& rest, bool bend, bool twist,
                             VecX* gradient, BandedMatrix* hessian,
                             const ElasticOptions& options) {
  double energy = 0.0;
  const std::size_t n = state.num_nodes();
  if (frames.tangents.size() != n - 1 || frames.ref_twists.size() != n - 2) {
    throw InvalidParameterError("frame set does not match rod size");
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::size_t s = i - 1;  // interior-node index
    StencilInput in;
    in.ea = state.positions[i] - state.positions[i - 1];
    in.eb = state.positions[i + 1] - state.positions[i];
    const double la = in.ea.norm();
    const double lb = in.eb.norm();
    if (!(la > kDegenerateEdgeLength)) throw DegenerateEdgeError(i - 1, la);
    if (!(lb > kDegenerateEdgeLength)) throw DegenerateEdgeError(i, lb);
    const Vec3& ta = frames.tangents[i - 1];
    const Vec3& tb = frames.tangents[i];
    const double chi = 1.0 + ta.dot(tb);
    if (chi < kAntiparallelTolerance) {
      throw AntiparallelTangentError("antiparallel tangents at interior node " +
                                     std::to_string(i));
    }
    in.m1a = frames.mat_m1[i - 1];
    in.m2a = frames.mat_m2[i - 1];
    in.m1b = frames.mat_m1[i];
    in.m2b = frames.mat_m2[i];
    in.psi = state.thetas[i] - state.thetas[i - 1] + frames.ref_twists[s];

    StencilConstants c;
    c.kappa_bar = rest.nat_curvature[s];
    c.psi_bar = rest.nat_twist[s];
    const double v = rest.voronoi_lengths[s];
    c.bend_coeff = rest.bend_stiffness / v;
    c.twist_coeff = rest.twist_stiffness / v;

    if (bend) {
      const Vec3 kb = 2.0 * ta.cross(tb) / chi;
      const double k1 = 0.5 * kb.dot(in.m2a + in.m2b) - c.kappa_bar[0];
      const double k2 = 0.5 * kb.dot(in.m1a + in.m1b) - c.kappa_bar[1];
      energy += 0.5 * c.bend_coeff * (k1 * k1 + k2 * k2);
    }
    if (twist) {
      const double d = in.psi - c.psi_bar;
      energy += 0.5 * c.twist_coeff * d * d;
    }

    const std::size_t dofs[11] = {
        node_dof(i - 1),     node_dof(i - 1) + 1, node_dof(i - 1) + 2,
        theta_dof(i - 1),    node_dof(i),         node_dof(i) + 1,
        node_dof(i) + 2,     theta_dof(i),        node_dof(i + 1),
        node_dof(i + 1) + 1, node_dof(i + 1) + 2};
    Vec8 g;
    if (hessian) {
      Mat11 h = edge_to_node_hessian(stencil_hessian(in, c, bend, twist, &g));
      if (options.project_hessian) project_psd<11>(h);
      hessian->add_block(dofs, 11, h);
    } else if (gradient) {
      g = stencil_gradient<double>(in.ea, in.eb, in.m1a, in.m2a, in.m1b, in.m2b,
                                   in.psi, c, bend, twist);
    }
    if (gradient) {
      const Vec11 gn = edge_to_node_gradient(g);
      for (int a = 0; a < 11; ++a) (*gradient)[dofs[a]] += gn[a];
    }
  }
  return energy;
}

ElasticResult evaluate(const RodState& state, const FrameSet& frames,
                       const RestConfig& rest, const EnergyTerms& terms,
                       bool with_hessian, const ElasticOptions& options) {
  ElasticResult r;
  const std::size_t n = state.num_dofs();
  r.gradient = VecX::Zero(static_cast<Eigen::Index>(n));
  if (with_hessian) r.hessian = BandedMatrix(n, kRodHalfBandwidth);
  r.energy = accumulate_elastic(state, frames, rest, terms, &r.gradient,
                                with_hessian ? &r.hessian : nullptr, options);
  return r;
}

}  // namespace

double accumulate_elastic(const RodState& state, const FrameSet& frames,
                          const RestConfig& rest, const EnergyTerms& terms,
                          VecX* gradient, BandedMatrix* hessian,
                          const ElasticOptions& options) {
  check_sizes(state, rest);
  double energy = 0.0;
  if (terms.stretch) {
    energy += accumulate_stretch(state, rest, gradient, hessian, options);
  }
  if (terms.bend || terms.twist) {
    energy += accumulate_bend_twist(state, frames, rest, terms.bend, terms.twist,
                                    gradient, hessian, options);
  }
  return energy;
}

ElasticResult stretch_energy(const RodState& state, const RestConfig& rest,
                             bool with_hessian, const ElasticOptions& options) {
  return evaluate(state, FrameSet{}, rest, {true, false, false}, with_hessian,
                  options);
}

ElasticResult bend_energy(const RodState& state, const FrameSet& frames,
                          const RestConfig& rest, bool with_hessian,
                          const ElasticOptions& options) {
  return evaluate(state, frames, rest, {false, true, false}, with_hessian, options);
}

ElasticResult twist_energy(const RodState& state, const FrameSet& frames,
                           const RestConfig& rest, bool with_hessian,
                           const ElasticOptions& options) {
  return evaluate(state, frames, rest, {false, false, true}, with_hessian, options);
}

ElasticResult total_elastic(const RodState& state, const FrameSet& frames,
                            const RestConfig& rest, bool with_hessian,
                            const ElasticOptions& options) {
  return evaluate(state, frames, rest, {true, true, true}, with_hessian, options);
}

Eigen::Matrix<double, 2, 8> curvature_gradient(const Vec3& ea, const Vec3& eb,
                                               const Vec3& m1a, const Vec3& m2a,
                                               const Vec3& m1b, const Vec3& m2b) {
  // Unit residuals isolate d(kappa_1) and d(kappa_2) from the stencil kernel.
  Eigen::Matrix<double, 2, 8> out;
  for (int row = 0; row < 2; ++row) {
    StencilConstants c;
    c.bend_coeff = 1.0;
    const Vec3 ta = ea.normalized();
    const Vec3 tb = eb.normalized();
    const Vec3 kb = 2.0 * ta.cross(tb) / (1.0 + ta.dot(tb));
    const Vec2 kappa(0.5 * kb.dot(m2a + m2b), 0.5 * kb.dot(m1a + m1b));
    // Choose kappa_bar so the residual is the unit vector for `row`.
    c.kappa_bar = kappa - Vec2::Unit(row);
    out.row(row) = stencil_gradient<double>(ea, eb, m1a, m2a, m1b, m2b, 0.0, c,
                                            true, false)
                       .transpose();
  }
  return out;
}

}  // namespace softrod
