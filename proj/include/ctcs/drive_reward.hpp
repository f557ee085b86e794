#pragma once

#include <array>
#include <cmath>
#include <span>

#include "ctcs/core_state.hpp"
#include "ctcs/types.hpp"

namespace ctcs {

/// Drive regularizer and the component mask. The default mask keeps the
/// drive a function of the resource deviations only; fatigues gate actions
/// but do not enter the discomfort signal.
struct DriveConfig {
  Scalar epsilon_reg = 1e-6;
  std::array<bool, 4> mask = {true, true, false, false};
};

/// d(delta) = sqrt(eps + sum of masked squared deviations). Strictly
/// positive and smooth everywhere, including at the set point.
template <typename Derived>
Scalar drive(const Eigen::MatrixBase<Derived>& delta, const DriveConfig& cfg = {}) {
  if (delta.size() != 4) {
    throw ContractViolation("drive: deviation vector must have 4 components");
  }
  Scalar q = cfg.epsilon_reg;
  for (int i = 0; i < 4; ++i) {
    if (cfg.mask[static_cast<std::size_t>(i)]) {
      const Scalar d = delta[i];
      q += d * d;
    }
  }
  return std::sqrt(q);
}

/// Finite-difference realization of r = -(d(delta))': the comfort gained
/// per unit time between two consecutive states.
Scalar reward_discrete(const Vec4& delta_prev, const Vec4& delta_next, Scalar step,
                       const DriveConfig& cfg = {});

/// Parameters of the discounted functionals used by the quadrature check.
struct DiscountedFunctional {
  Scalar gamma = 0.99;
  long horizon_steps = 0;
  Scalar step = 1e-3;
};

/// Quadrature check of V = d(t0) + ln(gamma) * J over one sampled drive
/// trajectory. V is the left-endpoint Riemann sum of gamma^s * r(s) with the
/// finite-difference reward, J the same sum over gamma^s * d(s). Returns the
/// signed residual V - d(0) - ln(gamma) * J. Throws ContractViolation when
/// the horizon is too short for the truncation to be negligible
/// (gamma^T >= 1e-6) or the sample count disagrees with horizon_steps.
Scalar lemma1_check(std::span<const Scalar> drive_samples, const DiscountedFunctional& fn);

/// Constant-consumption situation: initial deviations delta0, intake rate m
/// on the first need, elapsed time t.
struct ConsumptionScenario {
  VecX delta0;
  Scalar m = 0.0;
  Scalar t = 0.0;
};

/// Closed forms for the drive and reward under the constant control
/// u = [m, 0, ...]: d(t) = sqrt(eps + t^2 m^2 + 2 t m delta0_1 + delta0.delta0)
/// and r(t) = -(delta0_1 + t m) m / d(t).
Scalar scenario_drive(const ConsumptionScenario& s, const DriveConfig& cfg = {});
Scalar scenario_reward(const ConsumptionScenario& s, const DriveConfig& cfg = {});

/// Outcome of one derivative sign check. `derivative` is the central finite
/// difference, `case_sign` the sign of the quantity governing the case
/// split, `holds` whether the expected inequality is satisfied within
/// tolerance, `skipped` whether the scenario sits inside the excluded
/// case-boundary neighborhood.
struct SignReport {
  Scalar derivative = 0.0;
  int case_sign = 0;
  bool holds = true;
  bool skipped = false;
};

/// d r / d |delta0_1|: non-positive when delta0_1 >= 0 (overshoot dampens
/// the outcome), non-negative when delta0_1 <= 0 (deprivation amplifies it).
SignReport sign_property_deprivation(const ConsumptionScenario& s, const DriveConfig& cfg = {},
                                     Scalar tol = 1e-6, Scalar boundary = 1e-3);

/// d r / d |delta0_2|: sign follows the sign of delta0_1 + t m (cross-need
/// suppression of the outcome for the consumed resource).
SignReport sign_property_cross_need(const ConsumptionScenario& s, const DriveConfig& cfg = {},
                                    Scalar tol = 1e-6, Scalar boundary = 1e-3);

/// d d / d(tm): the drive falls with the consumed amount until the set point
/// is crossed, then rises.
SignReport sign_property_dose(const ConsumptionScenario& s, const DriveConfig& cfg = {},
                              Scalar tol = 1e-6, Scalar boundary = 1e-3);

}  // namespace ctcs
