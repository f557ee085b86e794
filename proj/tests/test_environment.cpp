#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "ctcs/environment.hpp"
#include "ctcs/rng.hpp"

using namespace ctcs;

namespace {

WorldState state_at(Scalar x, Scalar y, Vec4 delta = Vec4::Zero()) {
  WorldState s;
  s.delta = delta;
  s.position << x, y;
  return s;
}

std::set<ActionId> ids(const std::vector<ActionSpec>& actions) {
  std::set<ActionId> out;
  for (const auto& a : actions) out.insert(a.id);
  return out;
}

bool has(const std::vector<ActionSpec>& actions, ActionId id) {
  return ids(actions).count(id) > 0;
}

}  // namespace

TEST_CASE("default arena is valid, bad arenas are rejected") {
  Arena arena;
  CHECK_NOTHROW(validate(arena));
  Arena outside = arena;
  outside.resources[0].center << 1.5, 0.5;
  CHECK_THROWS_AS(validate(outside), ContractViolation);
  Arena overlapping = arena;
  overlapping.resources[1].center = overlapping.resources[0].center;
  CHECK_THROWS_AS(validate(overlapping), ContractViolation);
  Thresholds th;
  CHECK_NOTHROW(validate(th));
  Thresholds inverted = th;
  inverted.sleep_forced_min = 0.5;
  CHECK_THROWS_AS(validate(inverted), ContractViolation);
}

TEST_CASE("body dynamics at the set point with no control") {
  BodyParams params;
  const Vec6 rate = body_dynamics(state_at(0.5, 0.5), Control{}, params);
  Vec6 expected;
  expected << -0.05, -0.10, 0, 0, 0, 0;
  CHECK(rate.isApprox(expected, 1e-15));
}

TEST_CASE("body dynamics under consumption at low level") {
  BodyParams params;
  Vec4 delta;
  delta << -0.9, -1.9, 0.1, 0.1;
  const Control u = action_spec(ActionId::Consume1).control;
  const Vec6 rate = body_dynamics(state_at(0.3, 0.7, delta), u, params);
  // (c1 + u1) * level1 = (-0.05 + 0.1) * 0.1
  CHECK(rate[0] == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(rate[4] == 0.0);
  CHECK(rate[5] == 0.0);
}

TEST_CASE("idle control moves nothing") {
  BodyParams params;
  const Vec6 rate = body_dynamics(state_at(0.2, 0.9), action_spec(ActionId::Idle).control, params);
  CHECK(rate[4] == 0.0);
  CHECK(rate[5] == 0.0);
}

TEST_CASE("admissibility: fatigued walker mid-arena") {
  Arena arena;
  Thresholds th;
  Vec4 delta;
  delta << 0, 0, 7.0, 0.5;  // fm level 7, fs level 0.5
  const auto actions = admissible_actions(state_at(0.5, 0.5, delta), arena, th);
  CHECK(!has(actions, ActionId::WalkLeft));
  CHECK(!has(actions, ActionId::WalkRight));
  CHECK(!has(actions, ActionId::WalkDown));
  CHECK(!has(actions, ActionId::WalkUp));
  CHECK(!has(actions, ActionId::Sleep));
  CHECK(has(actions, ActionId::Idle));
  // Exactly: both go-to actions plus idle (not inside either circle).
  CHECK(ids(actions) == std::set<ActionId>{ActionId::GoToResource1, ActionId::GoToResource2,
                                           ActionId::Idle});
}

TEST_CASE("admissibility: forced sleep") {
  Arena arena;
  Thresholds th;
  Vec4 delta;
  delta << 0, 0, 0, 10.5;
  const auto actions = admissible_actions(state_at(0.5, 0.5, delta), arena, th);
  REQUIRE(actions.size() == 1);
  CHECK(actions[0].id == ActionId::Sleep);
}

TEST_CASE("admissibility: consuming at a resource center") {
  Arena arena;
  Thresholds th;
  Vec4 delta;
  delta << -0.9, -1.9, 0.1, 0.1;  // level1 = 0.1, far below the cap
  const auto actions =
      admissible_actions(state_at(0.25, 0.75, delta), arena, th);
  CHECK(has(actions, ActionId::Consume1));
  CHECK(!has(actions, ActionId::Consume2));

  // Above the consume cap the action disappears.
  Vec4 rich;
  rich << 7.5, 0, 0, 0;  // level1 = 8.5 > 8
  CHECK(!has(admissible_actions(state_at(0.25, 0.75, rich), arena, th), ActionId::Consume1));
}

TEST_CASE("admissibility: walls exclude walks, vision range gates go-to") {
  Arena arena;
  Thresholds th;
  CHECK(!has(admissible_actions(state_at(0.05, 0.5), arena, th), ActionId::WalkLeft));
  CHECK(has(admissible_actions(state_at(0.1, 0.5), arena, th), ActionId::WalkLeft));

  Arena big;
  big.side = 10.0;
  big.resources[0].center << 0.5, 0.5;
  big.resources[1].center << 9.5, 9.5;
  const auto actions = admissible_actions(state_at(9.0, 9.0), big, th);
  CHECK(!has(actions, ActionId::GoToResource1));  // distance ~ 12 > 4
  CHECK(has(actions, ActionId::GoToResource2));
}

TEST_CASE("step applies the full walking displacement") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  const WorldState next =
      step(state_at(0.5, 0.5), action_spec(ActionId::WalkRight), params, arena, th);
  CHECK(next.position[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(next.position[1] == 0.5);
  CHECK(next.clock == doctest::Approx(0.01));
  // The fatigue level was exactly zero, so the multiplicative row stays zero
  // and the post-step floor lifts it to the minimum level.
  CHECK(next.delta[2] == kLevelFloor);
}

TEST_CASE("step integrates internal components with dt") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  Vec4 delta;
  delta << 0, 0, 0, 2.0;  // sleep-fatigue level 2
  const WorldState next = step(state_at(0.5, 0.5, delta), action_spec(ActionId::Sleep), params,
                               arena, th);
  // rate = (0.0005 - 0.001) * 2 = -0.001 per unit time, scaled by dt
  CHECK(next.delta[3] == doctest::Approx(2.0 - 0.001 * 0.01).epsilon(1e-12));
  CHECK(next.sleep_steps_remaining == th.sleep_min_steps - 1);
}

TEST_CASE("idle decay erodes resource levels exponentially") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  WorldState s = state_at(0.5, 0.5);  // at the set point
  const Scalar factor1 = 1.0 + params.c[0] * params.dt;
  const Scalar factor2 = 1.0 + params.c[1] * params.dt;
  Scalar level1 = 1.0, level2 = 2.0;
  for (int k = 0; k < 50; ++k) {
    s = step(s, action_spec(ActionId::Idle), params, arena, th);
    level1 *= factor1;
    level2 *= factor2;
    CHECK(s.delta[0] + 1.0 == doctest::Approx(level1).epsilon(1e-12));
    CHECK(s.delta[1] + 2.0 == doctest::Approx(level2).epsilon(1e-12));
  }
}

TEST_CASE("consuming strictly increases a positive level") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  Vec4 delta;
  delta << -0.9, -1.9, 0.1, 0.1;
  WorldState s = state_at(0.25, 0.75, delta);
  for (int k = 0; k < 20; ++k) {
    const Scalar before = s.delta[0];
    s = step(s, action_spec(ActionId::Consume1), params, arena, th);
    CHECK(s.delta[0] > before);
  }
}

TEST_CASE("step is pure and rejects inadmissible actions") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  Vec4 delta;
  delta << -0.3, 0.4, 1.2, 0.2;
  const WorldState s = state_at(0.42, 0.58, delta);
  const WorldState a = step(s, action_spec(ActionId::WalkUp), params, arena, th);
  const WorldState b = step(s, action_spec(ActionId::WalkUp), params, arena, th);
  CHECK(a.delta == b.delta);
  CHECK(a.position == b.position);
  CHECK(a.clock == b.clock);

  // Not inside resource 2's circle.
  CHECK_THROWS_AS(step(s, action_spec(ActionId::Consume2), params, arena, th), ContractViolation);
  // Not sleep-eligible at fs level 0.2.
  CHECK_THROWS_AS(step(s, action_spec(ActionId::Sleep), params, arena, th), ContractViolation);
}

TEST_CASE("go-to walks toward the resource and lands on the center") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  WorldState s = state_at(0.25, 0.25);
  const Vec2 target = arena.resources[0].center;  // (0.25, 0.75), straight up
  Scalar prev_dist = (target - s.position).norm();
  for (int k = 0; k < 5; ++k) {
    s = step(s, action_spec(ActionId::GoToResource1), params, arena, th);
    const Scalar dist = (target - s.position).norm();
    CHECK(dist < prev_dist);
    CHECK(in_bounds(s.position, arena));
    prev_dist = dist;
  }
  // 5 substeps of 0.1 cover the half-unit distance; no overshoot after.
  CHECK(prev_dist <= 1e-12);
  const WorldState parked = step(s, action_spec(ActionId::GoToResource1), params, arena, th);
  CHECK((target - parked.position).norm() <= 1e-12);
}

TEST_CASE("sleep bout: armed once, forced until exhausted") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  Vec4 delta;
  delta << 0, 0, 0, 1.5;  // eligible but not forced
  WorldState s = state_at(0.5, 0.5, delta);
  CHECK(has(admissible_actions(s, arena, th), ActionId::Sleep));
  s = step(s, action_spec(ActionId::Sleep), params, arena, th);
  CHECK(s.sleep_steps_remaining == 999);
  for (int k = 0; k < 999; ++k) {
    const auto actions = admissible_actions(s, arena, th);
    REQUIRE(actions.size() == 1);
    REQUIRE(actions[0].id == ActionId::Sleep);
    s = step(s, actions[0], params, arena, th);
  }
  CHECK(s.sleep_steps_remaining == 0);
  CHECK(admissible_actions(s, arena, th).size() > 1);
}

TEST_CASE("levels are floored after each step") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  Vec4 delta;
  // Resource 1 just above the floor; one decay step would cross it.
  delta << kLevelFloor + 1e-7 - 1.0, 0, 0, 0;
  WorldState s = state_at(0.5, 0.5, delta);
  s = step(s, action_spec(ActionId::Idle), params, arena, th);
  CHECK(s.delta[0] == kLevelFloor - 1.0);
  CHECK(s.delta[0] + 1.0 == doctest::Approx(kLevelFloor).epsilon(1e-12));
}

TEST_CASE("random rollouts keep every behavioural constraint") {
  Arena arena;
  BodyParams params;
  Thresholds th;
  std::mt19937_64 gen(99);
  Vec4 delta;
  delta << -0.9, -1.9, 5.9, 9.995;  // near both fatigue thresholds
  WorldState s = state_at(0.45, 0.45, delta);
  long sleep_run = 0;
  for (int k = 0; k < 20000; ++k) {
    const auto actions = admissible_actions(s, arena, th);
    REQUIRE(!actions.empty());
    const auto& choice = actions[uniform_index(gen, actions.size())];
    const Scalar fm = s.delta[2];
    const Scalar fs = s.delta[3];
    const bool walk = choice.id == ActionId::WalkLeft || choice.id == ActionId::WalkRight ||
                      choice.id == ActionId::WalkDown || choice.id == ActionId::WalkUp;
    if (walk) CHECK(fm <= th.walk_fatigue_max);
    if (fs >= th.sleep_forced_min) CHECK(choice.id == ActionId::Sleep);
    if (choice.id == ActionId::Sleep) {
      ++sleep_run;
    } else {
      if (sleep_run > 0) CHECK(sleep_run >= th.sleep_min_steps);
      sleep_run = 0;
    }
    s = step(s, choice, params, arena, th);
    CHECK(in_bounds(s.position, arena));
  }
}
