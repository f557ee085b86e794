#include "ctcs/drive_reward.hpp"

#include <cmath>
#include <string>

namespace ctcs {

Scalar reward_discrete(const Vec4& delta_prev, const Vec4& delta_next, Scalar step,
                       const DriveConfig& cfg) {
  if (!(step > 0)) {
    throw ContractViolation("reward_discrete: step must be positive");
  }
  return -(drive(delta_next, cfg) - drive(delta_prev, cfg)) / step;
}

Scalar lemma1_check(std::span<const Scalar> drive_samples, const DiscountedFunctional& fn) {
  if (!(fn.gamma > 0.0 && fn.gamma < 1.0)) {
    throw ContractViolation("lemma1_check: gamma must lie in (0,1)");
  }
  if (!(fn.step > 0.0) || fn.horizon_steps <= 0) {
    throw ContractViolation("lemma1_check: horizon_steps and step must be positive");
  }
  if (static_cast<long>(drive_samples.size()) != fn.horizon_steps + 1) {
    throw ContractViolation("lemma1_check: expected horizon_steps+1 samples, got " +
                            std::to_string(drive_samples.size()));
  }
  const Scalar log_gamma = std::log(fn.gamma);
  const Scalar horizon_time = static_cast<Scalar>(fn.horizon_steps) * fn.step;
  if (std::exp(log_gamma * horizon_time) >= 1e-6) {
    throw ContractViolation("lemma1_check: horizon too short, gamma^T >= 1e-6");
  }

  const Scalar gamma_dt = std::exp(log_gamma * fn.step);
  Scalar discount = 1.0;
  Scalar value = 0.0;       // sum of gamma^{k dt} * r_k * dt, r_k = -(d_{k+1}-d_k)/dt
  Scalar deviation = 0.0;   // sum of gamma^{k dt} * d_k * dt
  for (long k = 0; k < fn.horizon_steps; ++k) {
    value -= discount * (drive_samples[static_cast<std::size_t>(k + 1)] -
                         drive_samples[static_cast<std::size_t>(k)]);
    deviation += discount * drive_samples[static_cast<std::size_t>(k)] * fn.step;
    discount *= gamma_dt;
  }
  return value - drive_samples[0] - log_gamma * deviation;
}

namespace {

void check_scenario(const ConsumptionScenario& s, int min_components) {
  if (s.delta0.size() < min_components) {
    throw ContractViolation("scenario: delta0 needs at least " + std::to_string(min_components) +
                            " components");
  }
  if (!s.delta0.allFinite() || !std::isfinite(s.m) || !std::isfinite(s.t)) {
    throw ContractViolation("scenario: non-finite input");
  }
}

Scalar scenario_drive_at(Scalar consumed, Scalar delta01, Scalar delta0_sq, Scalar eps) {
  return std::sqrt(eps + consumed * consumed + 2.0 * consumed * delta01 + delta0_sq);
}

}  // namespace

Scalar scenario_drive(const ConsumptionScenario& s, const DriveConfig& cfg) {
  check_scenario(s, 1);
  return scenario_drive_at(s.t * s.m, s.delta0[0], s.delta0.squaredNorm(), cfg.epsilon_reg);
}

Scalar scenario_reward(const ConsumptionScenario& s, const DriveConfig& cfg) {
  check_scenario(s, 1);
  return -(s.delta0[0] + s.t * s.m) * s.m / scenario_drive(s, cfg);
}

SignReport sign_property_deprivation(const ConsumptionScenario& s, const DriveConfig& cfg,
                                     Scalar tol, Scalar boundary) {
  check_scenario(s, 1);
  SignReport report;
  const Scalar magnitude = std::abs(s.delta0[0]);
  if (magnitude < boundary) {
    report.skipped = true;
    return report;
  }
  const Scalar sign = s.delta0[0] >= 0 ? 1.0 : -1.0;
  const Scalar h = 1e-6 * std::max<Scalar>(1.0, magnitude);
  ConsumptionScenario plus = s;
  ConsumptionScenario minus = s;
  plus.delta0[0] = sign * (magnitude + h);
  minus.delta0[0] = sign * (magnitude - h);
  report.derivative = (scenario_reward(plus, cfg) - scenario_reward(minus, cfg)) / (2.0 * h);
  report.case_sign = s.delta0[0] >= 0 ? 1 : -1;
  report.holds = report.case_sign > 0 ? report.derivative <= tol : report.derivative >= -tol;
  return report;
}

SignReport sign_property_cross_need(const ConsumptionScenario& s, const DriveConfig& cfg,
                                    Scalar tol, Scalar boundary) {
  check_scenario(s, 2);
  SignReport report;
  const Scalar magnitude = std::abs(s.delta0[1]);
  const Scalar reached = s.delta0[0] + s.t * s.m;
  if (magnitude < boundary || std::abs(reached) < boundary) {
    report.skipped = true;
    return report;
  }
  const Scalar sign = s.delta0[1] >= 0 ? 1.0 : -1.0;
  const Scalar h = 1e-6 * std::max<Scalar>(1.0, magnitude);
  ConsumptionScenario plus = s;
  ConsumptionScenario minus = s;
  plus.delta0[1] = sign * (magnitude + h);
  minus.delta0[1] = sign * (magnitude - h);
  report.derivative = (scenario_reward(plus, cfg) - scenario_reward(minus, cfg)) / (2.0 * h);
  report.case_sign = reached >= 0 ? 1 : -1;
  report.holds = report.case_sign < 0 ? report.derivative <= tol : report.derivative >= -tol;
  return report;
}

SignReport sign_property_dose(const ConsumptionScenario& s, const DriveConfig& cfg, Scalar tol,
                              Scalar boundary) {
  check_scenario(s, 1);
  SignReport report;
  const Scalar consumed = s.t * s.m;
  const Scalar reached = s.delta0[0] + consumed;
  const Scalar delta0_sq = s.delta0.squaredNorm();
  const Scalar h = 1e-6 * std::max<Scalar>(1.0, std::abs(consumed));
  report.derivative =
      (scenario_drive_at(consumed + h, s.delta0[0], delta0_sq, cfg.epsilon_reg) -
       scenario_drive_at(consumed - h, s.delta0[0], delta0_sq, cfg.epsilon_reg)) /
      (2.0 * h);
  if (std::abs(reached) < boundary) {
    report.skipped = true;
    return report;
  }
  report.case_sign = reached >= 0 ? 1 : -1;
  report.holds = report.case_sign < 0 ? report.derivative <= tol : report.derivative >= -tol;
  return report;
}

}  // namespace ctcs
