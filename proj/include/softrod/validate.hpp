#pragma once

// Self-checks run by `softrod validate`: finite-difference derivative
// checks, frame orthonormality, the banded solver against a dense solve and
// the arc curvature closed form.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "softrod/elasticity.hpp"

namespace softrod {

using EnergyFunction = std::function<ElasticResult(
    const RodState&, const FrameSet&, const RestConfig&, bool with_hessian)>;

/// The energy terms under test. Defaults call the library; tests swap in
/// mutated versions.
struct EnergyHooks {
  EnergyFunction stretch;
  EnergyFunction bend;
  EnergyFunction twist;

  static EnergyHooks library();
};

struct ValidateOptions {
  int n_states = 100;
  std::uint64_t seed = 1;
  double gradient_tol = 1e-6;  // elastic gradients vs central differences
  double hessian_tol = 1e-5;   // Hessians vs differences of the gradient
  double contact_tol = 1e-5;   // contact gradients
  double frame_tol = 1e-10;
  double solver_tol = 1e-9;
  double curvature_tol = 1e-9;
  EnergyHooks hooks = EnergyHooks::library();
};

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ValidateReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  const CheckResult* find(const std::string& name) const;
};

ValidateReport run_validation(const ValidateOptions& options = {});

/// Random perturbed rod with nonzero rest curvature/twist and frames that
/// went through several transports (nonzero reference twist).
Rod random_rod(std::uint64_t seed, std::size_t n_nodes = 21);

}  // namespace softrod
