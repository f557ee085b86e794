#include "ctcs/core_state.hpp"

#include <cmath>

namespace ctcs {

namespace {

Control make_control(Scalar u1, Scalar u2, Scalar u3, Scalar u4, Scalar u5, Scalar u6) {
  Control c;
  c.values << u1, u2, u3, u4, u5, u6;
  return c;
}

}  // namespace

const char* to_string(ActionId id) {
  switch (id) {
    case ActionId::WalkLeft: return "walk_left";
    case ActionId::WalkRight: return "walk_right";
    case ActionId::WalkDown: return "walk_down";
    case ActionId::WalkUp: return "walk_up";
    case ActionId::GoToResource1: return "goto_resource1";
    case ActionId::GoToResource2: return "goto_resource2";
    case ActionId::Consume1: return "consume1";
    case ActionId::Consume2: return "consume2";
    case ActionId::Sleep: return "sleep";
    case ActionId::Idle: return "idle";
  }
  return "unknown";
}

std::optional<ActionId> action_from_string(std::string_view name) {
  for (int i = 0; i < kActionCount; ++i) {
    const auto id = static_cast<ActionId>(i);
    if (name == to_string(id)) return id;
  }
  return std::nullopt;
}

const std::array<ActionSpec, kActionCount>& action_table() {
  // Walking displaces by 0.1 and costs 0.01 muscular fatigue; consuming adds
  // 0.1 of one resource; sleeping drains sleep fatigue at 0.001 and pins the
  // agent for at least 1000 elementary steps. The go-to control's position
  // components are resolved per step toward the target resource.
  static const std::array<ActionSpec, kActionCount> table = {{
      {ActionId::WalkLeft, make_control(0, 0, 0.01, 0, -0.1, 0), 1},
      {ActionId::WalkRight, make_control(0, 0, 0.01, 0, 0.1, 0), 1},
      {ActionId::WalkDown, make_control(0, 0, 0.01, 0, 0, -0.1), 1},
      {ActionId::WalkUp, make_control(0, 0, 0.01, 0, 0, 0.1), 1},
      {ActionId::GoToResource1, make_control(0, 0, 0.01, 0, 0, 0), 1},
      {ActionId::GoToResource2, make_control(0, 0, 0.01, 0, 0, 0), 1},
      {ActionId::Consume1, make_control(0.1, 0, 0, 0, 0, 0), 1},
      {ActionId::Consume2, make_control(0, 0.1, 0, 0, 0, 0), 1},
      {ActionId::Sleep, make_control(0, 0, 0, -0.001, 0, 0), 1000},
      {ActionId::Idle, make_control(0, 0, 0, 0, 0, 0), 1},
  }};
  return table;
}

const ActionSpec& action_spec(ActionId id) {
  return action_table()[static_cast<std::size_t>(id)];
}

Vec4 deviation_from_levels(const VecX& levels, const SetPoint& setpoint) {
  if (levels.size() != 4) {
    throw ContractViolation("deviation_from_levels: levels must have 4 components, got " +
                            std::to_string(levels.size()));
  }
  if (!levels.allFinite() || !setpoint.values.allFinite()) {
    throw ContractViolation("deviation_from_levels: non-finite input");
  }
  return levels - setpoint.values;
}

Vec4 levels_from_deviation(const Vec4& delta, const SetPoint& setpoint) {
  return delta + setpoint.values;
}

}  // namespace ctcs
