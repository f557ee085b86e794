#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "ctcs/types.hpp"

namespace ctcs {

/// Homeostatic set points for (resource1, resource2, muscular fatigue,
/// sleep fatigue). Internal state is stored as deviations from these.
struct SetPoint {
  Vec4 values = (Vec4() << 1.0, 2.0, 0.0, 0.0).finished();
};

/// Full agent state: internal deviations, planar position, simulated time,
/// and the remaining forced-sleep step counter (0 when awake).
struct WorldState {
  Vec4 delta = Vec4::Zero();
  Vec2 position = Vec2::Zero();
  Scalar clock = 0.0;
  long sleep_steps_remaining = 0;
};

/// Instantaneous effect of an action on (delta1, delta2, f_m, f_s, x, y).
struct Control {
  Vec6 values = Vec6::Zero();
};

enum class ActionId : int {
  WalkLeft = 0,
  WalkRight,
  WalkDown,
  WalkUp,
  GoToResource1,
  GoToResource2,
  Consume1,
  Consume2,
  Sleep,
  Idle,
};

inline constexpr int kActionCount = 10;

const char* to_string(ActionId id);
std::optional<ActionId> action_from_string(std::string_view name);

/// A discrete action: identifier, control vector, and the minimum number of
/// consecutive elementary steps it occupies once begun.
struct ActionSpec {
  ActionId id = ActionId::Idle;
  Control control;
  int min_duration_steps = 1;
};

/// The fixed ten-action vocabulary, indexed by ActionId.
const std::array<ActionSpec, kActionCount>& action_table();
const ActionSpec& action_spec(ActionId id);

/// delta = levels - set point, componentwise. Throws ContractViolation on a
/// length mismatch or non-finite input.
Vec4 deviation_from_levels(const VecX& levels, const SetPoint& setpoint);

Vec4 levels_from_deviation(const Vec4& delta, const SetPoint& setpoint);

}  // namespace ctcs
