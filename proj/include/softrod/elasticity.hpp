#pragma once

// Stretching, bending and twisting energies of a discrete elastic rod with
// analytic gradients and banded Hessians over the 4N-1 interleaved DOFs.

#include "softrod/banded.hpp"
#include "softrod/geometry.hpp"

namespace softrod {

struct ElasticOptions {
  /// Clamp negative eigenvalues of every stencil Hessian to zero.
  bool project_hessian = false;
};

struct ElasticResult {
  double energy = 0.0;
  VecX gradient;
  BandedMatrix hessian;  // empty (size 0) when not requested
};

/// E_s = 1/2 K_s sum (|e^i| / rest^i - 1)^2 rest^i. Theta entries are zero.
ElasticResult stretch_energy(const RodState& state, const RestConfig& rest,
                             bool with_hessian = true,
                             const ElasticOptions& options = {});

/// E_b = 1/2 K_b sum |kappa_i - kappa_bar_i|^2 / V_i.
ElasticResult bend_energy(const RodState& state, const FrameSet& frames,
                          const RestConfig& rest, bool with_hessian = true,
                          const ElasticOptions& options = {});

/// E_t = 1/2 K_t sum (psi_i - psi_bar_i)^2 / V_i.
ElasticResult twist_energy(const RodState& state, const FrameSet& frames,
                           const RestConfig& rest, bool with_hessian = true,
                           const ElasticOptions& options = {});

/// E_s + E_b + E_t with the summed gradient and Hessian.
ElasticResult total_elastic(const RodState& state, const FrameSet& frames,
                            const RestConfig& rest, bool with_hessian = true,
                            const ElasticOptions& options = {});

/// Which energy terms an accumulation pass evaluates.
struct EnergyTerms {
  bool stretch = true;
  bool bend = true;
  bool twist = true;
};

/// Adds the selected energies into `gradient` (length 4N-1) and, when
/// non-null, `hessian`; returns the energy. Used by the steppers to avoid
/// per-call allocation. `frames` must match the state's tangents.
double accumulate_elastic(const RodState& state, const FrameSet& frames,
                          const RestConfig& rest, const EnergyTerms& terms,
                          VecX* gradient, BandedMatrix* hessian,
                          const ElasticOptions& options = {});

/// Gradients of the material curvatures at one interior node with respect to
/// (e^{i-1}, e^i, theta^{i-1}, theta^i); rows are kappa_1 and kappa_2.
/// Exposed for tests.
Eigen::Matrix<double, 2, 8> curvature_gradient(const Vec3& e_prev,
                                               const Vec3& e_next,
                                               const Vec3& m1_prev,
                                               const Vec3& m2_prev,
                                               const Vec3& m1_next,
                                               const Vec3& m2_next);

}  // namespace softrod
