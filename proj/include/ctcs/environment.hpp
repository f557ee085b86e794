#pragma once

#include <array>
#include <vector>

#include "ctcs/core_state.hpp"
#include "ctcs/types.hpp"

namespace ctcs {

struct ResourceSite {
  Vec2 center = Vec2::Zero();
  Scalar radius = 0.3;
  int index = 1;
};

/// Square world with two fixed resource circles. Resource centers must lie
/// inside the arena so the consumable regions are reachable.
struct Arena {
  Scalar side = 1.0;
  std::array<ResourceSite, 2> resources = {
      ResourceSite{(Vec2() << 0.25, 0.75).finished(), 0.3, 1},
      ResourceSite{(Vec2() << 0.75, 0.25).finished(), 0.3, 2},
  };
  Scalar vision_range = 4.0;
};

void validate(const Arena& arena);

/// Self-regulation rates and the integration step. c components multiply the
/// corresponding level: resources and muscular fatigue self-decay, sleep
/// pressure self-grows.
struct BodyParams {
  Vec4 c = (Vec4() << -0.05, -0.05, -0.008, 0.0005).finished();
  SetPoint setpoint;
  Scalar dt = 0.01;
};

struct Thresholds {
  Scalar walk_fatigue_max = 6.0;
  Scalar sleep_eligible_min = 1.0;
  Scalar sleep_forced_min = 10.0;
  Scalar consume_level_max = 8.0;
  long sleep_min_steps = 1000;
};

void validate(const Thresholds& th);

/// Levels are floored here after each step: the multiplicative dynamics
/// cannot recover a component once it reaches exactly zero.
inline constexpr Scalar kLevelFloor = 1e-3;

/// True body dynamics: rate_i = (c_i + u_i) * (delta_i + setpoint_i) for the
/// four internal components, plus the control's position components as
/// position rates. Learner-facing code never calls this; it only ever sees
/// observed transitions.
Vec6 body_dynamics(const WorldState& state, const Control& control, const BodyParams& params);

/// The control an action applies from this state. Go-to actions get their
/// position components pointed at the target resource with step magnitude
/// 0.1 (less when the center is closer than that); everything else uses the
/// fixed table entry.
Control resolve_control(const WorldState& state, ActionId id, const Arena& arena);

/// The admissible subset of the action vocabulary, in action-id order.
/// Never empty: idle or sleep is always available. The set point is needed
/// to read fatigue and resource levels off the stored deviations.
std::vector<ActionSpec> admissible_actions(const WorldState& state, const Arena& arena,
                                           const Thresholds& th, const SetPoint& setpoint = {});

/// One Euler step. Internal components integrate with dt; the position moves
/// by the control's full displacement per elementary action. Sleeping arms
/// the forced-sleep counter on entry and decrements it each step. Throws
/// ContractViolation when the action is not admissible in `state`.
WorldState step(const WorldState& state, const ActionSpec& action, const BodyParams& params,
                const Arena& arena, const Thresholds& th);

bool in_bounds(const Vec2& position, const Arena& arena);

WorldState make_initial_state(const Vec4& initial_levels, const Vec2& start_position,
                              const BodyParams& params, const Arena& arena);

}  // namespace ctcs
