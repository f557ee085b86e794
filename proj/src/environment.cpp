#include "ctcs/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ctcs {

namespace {

int resource_index(ActionId id) {
  switch (id) {
    case ActionId::GoToResource1:
    case ActionId::Consume1:
      return 0;
    case ActionId::GoToResource2:
    case ActionId::Consume2:
      return 1;
    default:
      return -1;
  }
}

}  // namespace

void validate(const Arena& arena) {
  if (!(arena.side > 0)) throw ContractViolation("arena: side must be positive");
  if (!(arena.vision_range > 0)) throw ContractViolation("arena: vision_range must be positive");
  for (const auto& site : arena.resources) {
    if (!(site.radius > 0)) throw ContractViolation("arena: resource radius must be positive");
    if (!in_bounds(site.center, arena)) {
      throw ContractViolation("arena: resource center outside the arena");
    }
  }
  if ((arena.resources[0].center - arena.resources[1].center).norm() == 0.0) {
    throw ContractViolation("arena: resource centers must be distinct");
  }
}

void validate(const Thresholds& th) {
  if (!(th.walk_fatigue_max > 0) || !(th.sleep_eligible_min > 0) || !(th.sleep_forced_min > 0) ||
      !(th.consume_level_max > 0) || th.sleep_min_steps <= 0) {
    throw ContractViolation("thresholds: all values must be positive");
  }
  if (!(th.sleep_forced_min > th.sleep_eligible_min)) {
    throw ContractViolation("thresholds: forced sleep threshold must exceed the eligibility one");
  }
}

bool in_bounds(const Vec2& position, const Arena& arena) {
  return position[0] >= 0.0 && position[0] <= arena.side && position[1] >= 0.0 &&
         position[1] <= arena.side;
}

Vec6 body_dynamics(const WorldState& state, const Control& control, const BodyParams& params) {
  if (!state.delta.allFinite() || !control.values.allFinite()) {
    throw ContractViolation("body_dynamics: non-finite input");
  }
  Vec6 rate;
  for (int i = 0; i < 4; ++i) {
    const Scalar level = state.delta[i] + params.setpoint.values[i];
    rate[i] = (params.c[i] + control.values[i]) * level;
  }
  rate[4] = control.values[4];
  rate[5] = control.values[5];
  return rate;
}

Control resolve_control(const WorldState& state, ActionId id, const Arena& arena) {
  Control control = action_spec(id).control;
  if (id == ActionId::GoToResource1 || id == ActionId::GoToResource2) {
    const auto& site = arena.resources[static_cast<std::size_t>(resource_index(id))];
    const Vec2 offset = site.center - state.position;
    const Scalar dist = offset.norm();
    if (dist > 0.0) {
      control.values.tail<2>() = offset * (std::min<Scalar>(0.1, dist) / dist);
    }
  }
  return control;
}

std::vector<ActionSpec> admissible_actions(const WorldState& state, const Arena& arena,
                                           const Thresholds& th, const SetPoint& setpoint) {
  const Vec4 levels = levels_from_deviation(state.delta, setpoint);
  const Scalar fm = levels[2];
  const Scalar fs = levels[3];

  // Mid-bout or forced sleep leaves no other choice.
  if (state.sleep_steps_remaining > 0 || fs >= th.sleep_forced_min) {
    return {action_spec(ActionId::Sleep)};
  }

  std::vector<ActionSpec> out;
  out.reserve(kActionCount);
  for (const ActionSpec& spec : action_table()) {
    bool ok = false;
    switch (spec.id) {
      case ActionId::WalkLeft:
      case ActionId::WalkRight:
      case ActionId::WalkDown:
      case ActionId::WalkUp: {
        const Vec2 target = state.position + spec.control.values.tail<2>();
        ok = fm <= th.walk_fatigue_max && in_bounds(target, arena);
        break;
      }
      case ActionId::GoToResource1:
      case ActionId::GoToResource2: {
        const auto& site = arena.resources[static_cast<std::size_t>(resource_index(spec.id))];
        ok = (site.center - state.position).norm() <= arena.vision_range;
        break;
      }
      case ActionId::Consume1:
      case ActionId::Consume2: {
        const int k = resource_index(spec.id);
        const auto& site = arena.resources[static_cast<std::size_t>(k)];
        const bool inside = (site.center - state.position).norm() <= site.radius;
        ok = inside && levels[k] <= th.consume_level_max;
        break;
      }
      case ActionId::Sleep:
        ok = fs >= th.sleep_eligible_min;
        break;
      case ActionId::Idle:
        ok = true;
        break;
    }
    if (ok) out.push_back(spec);
  }
  return out;
}

WorldState step(const WorldState& state, const ActionSpec& action, const BodyParams& params,
                const Arena& arena, const Thresholds& th) {
  const auto admissible = admissible_actions(state, arena, th, params.setpoint);
  const bool allowed = std::any_of(admissible.begin(), admissible.end(),
                                   [&](const ActionSpec& a) { return a.id == action.id; });
  if (!allowed) {
    throw ContractViolation(std::string("step: action ") + to_string(action.id) +
                            " not admissible in this state");
  }

  const Control control = resolve_control(state, action.id, arena);
  const Vec6 rate = body_dynamics(state, control, params);

  WorldState next = state;
  next.delta += rate.head<4>() * params.dt;
  next.position += control.values.tail<2>();
  next.clock += params.dt;

  if (action.id == ActionId::Sleep) {
    if (next.sleep_steps_remaining == 0) next.sleep_steps_remaining = th.sleep_min_steps;
    next.sleep_steps_remaining -= 1;
  }

  for (int i = 0; i < 4; ++i) {
    const Scalar level = next.delta[i] + params.setpoint.values[i];
    if (level < kLevelFloor) next.delta[i] = kLevelFloor - params.setpoint.values[i];
  }
  return next;
}

WorldState make_initial_state(const Vec4& initial_levels, const Vec2& start_position,
                              const BodyParams& params, const Arena& arena) {
  WorldState state;
  state.delta = deviation_from_levels(initial_levels, params.setpoint);
  state.position = start_position;
  if (!in_bounds(state.position, arena)) {
    throw ContractViolation("initial state: start position outside the arena");
  }
  return state;
}

}  // namespace ctcs
