#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ctcs/drive_reward.hpp"
#include "ctcs/rng.hpp"
#include "ctcs/verify.hpp"

using namespace ctcs;

namespace {

Vec4 vec4(Scalar a, Scalar b, Scalar c, Scalar d) { return (Vec4() << a, b, c, d).finished(); }

ConsumptionScenario scenario(Scalar d1, Scalar d2, Scalar m, Scalar t) {
  ConsumptionScenario s;
  s.delta0 = VecX(2);
  s.delta0 << d1, d2;
  s.m = m;
  s.t = t;
  return s;
}

}  // namespace

TEST_CASE("drive examples") {
  DriveConfig cfg;
  CHECK(drive(Vec4::Zero(), cfg) == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(drive(vec4(3, 4, 0, 0), cfg) == doctest::Approx(5.0).epsilon(1e-6));
  // Fatigues excluded by the default mask.
  CHECK(drive(vec4(0, 0, 7, 9), cfg) == doctest::Approx(1e-3).epsilon(1e-9));

  DriveConfig all;
  all.mask = {true, true, true, true};
  CHECK(drive(vec4(0, 0, 3, 4), all) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("drive positivity and sign-flip invariance") {
  DriveConfig cfg;
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    Vec4 delta;
    for (int i = 0; i < 4; ++i) delta[i] = uniform_range(gen, -6.0, 6.0);
    const Scalar d = drive(delta, cfg);
    CHECK(d >= std::sqrt(cfg.epsilon_reg));
    const int flip = static_cast<int>(uniform_index(gen, 4));
    Vec4 flipped = delta;
    flipped[flip] = -flipped[flip];
    CHECK(drive(flipped, cfg) == d);
  }
}

TEST_CASE("reward_discrete examples and antisymmetry") {
  DriveConfig cfg;
  const Vec4 a = vec4(3, 4, 0, 0);      // drive ~ 5
  const Vec4 b = vec4(4.9, 0, 0, 0);    // drive ~ 4.9
  CHECK(reward_discrete(a, a, 0.01, cfg) == 0.0);
  CHECK(reward_discrete(a, b, 0.01, cfg) == doctest::Approx(10.0).epsilon(1e-5));
  // Increasing drive means strictly negative reward.
  CHECK(reward_discrete(b, a, 0.01, cfg) < 0.0);
  // Swapping endpoints negates exactly.
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    Vec4 u, v;
    for (int i = 0; i < 4; ++i) {
      u[i] = uniform_range(gen, -3.0, 3.0);
      v[i] = uniform_range(gen, -3.0, 3.0);
    }
    CHECK(reward_discrete(u, v, 0.01, cfg) == -reward_discrete(v, u, 0.01, cfg));
  }
  CHECK_THROWS_AS(reward_discrete(a, b, 0.0, cfg), ContractViolation);
}

TEST_CASE("scenario drive and reward closed forms") {
  DriveConfig cfg;
  // Exact hit of the set point: only the regularizer remains.
  CHECK(scenario_drive(scenario(-1, 0, 1, 1), cfg) == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(scenario_reward(scenario(-1, 0, 0.5, 0), cfg) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(scenario_reward(scenario(1, 0, 0.5, 0), cfg) == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("consuming a deprived resource rewards, overshoot punishes") {
  DriveConfig cfg;
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 500; ++trial) {
    const Scalar m = uniform_range(gen, 0.01, 1.0);
    const Scalar t = uniform_range(gen, 0.0, 2.0);
    const Scalar d2 = uniform_range(gen, -2.0, 2.0);
    {
      // delta01 <= 0 and delta01 + t m <= 0.
      const Scalar d1 = -uniform_range(gen, 0.01, 5.0) - t * m;
      CHECK(scenario_reward(scenario(d1, d2, m, t), cfg) > 0.0);
    }
    {
      const Scalar d1 = uniform_range(gen, 0.01, 5.0);
      CHECK(scenario_reward(scenario(d1, d2, m, t), cfg) < 0.0);
    }
  }
}

TEST_CASE("sign property examples") {
  SUBCASE("deprivation") {
    auto r = sign_property_deprivation(scenario(-0.8, 0.3, 0.1, 1));
    CHECK(!r.skipped);
    CHECK(r.derivative >= -1e-6);
    CHECK(r.holds);
    r = sign_property_deprivation(scenario(0.5, 0.3, 0.1, 1));
    CHECK(r.derivative <= 1e-6);
    CHECK(r.holds);
    CHECK(sign_property_deprivation(scenario(0, 0.3, 0.1, 1)).skipped);
  }
  SUBCASE("cross need") {
    auto r = sign_property_cross_need(scenario(-1, 0.5, 0.1, 1));  // reached -0.9 < 0
    CHECK(!r.skipped);
    CHECK(r.case_sign == -1);
    CHECK(r.derivative <= 1e-6);
    CHECK(r.holds);
    r = sign_property_cross_need(scenario(-0.05, 0.5, 1, 1));  // reached 0.95 > 0
    CHECK(r.case_sign == 1);
    CHECK(r.derivative >= -1e-6);
    CHECK(r.holds);
    CHECK(sign_property_cross_need(scenario(-1, 0, 0.1, 1)).skipped);
  }
  SUBCASE("dose") {
    auto r = sign_property_dose(scenario(-1, 0, 0.5, 1));  // consumed 0.5, reached -0.5
    CHECK(!r.skipped);
    CHECK(r.derivative <= 1e-6);
    CHECK(r.holds);
    r = sign_property_dose(scenario(-1, 0, 0.5, 3));  // consumed 1.5, reached +0.5
    CHECK(r.derivative >= -1e-6);
    CHECK(r.holds);
    // At the drive minimum the finite difference vanishes up to rounding
    // noise in the cancelled radicand, far below the sqrt(eps) scale.
    r = sign_property_dose(scenario(-0.5, 0, 0.5, 1));
    CHECK(r.skipped);
    CHECK(std::abs(r.derivative) <= 1e-6);
  }
}

TEST_CASE("randomized sign properties hold") {
  // Smaller count than the acceptance suite; same generator family.
  for (const auto& report : verify::signs_suite(200)) {
    CHECK(report.trials == 200);
    CHECK(report.violations == 0);
  }
}

TEST_CASE("lemma1 quadrature on a constant drive") {
  // r is identically zero, so V = 0 and the identity closes analytically up
  // to the O(dt) quadrature bias and the 1e-6 truncation tail.
  const Scalar dt = 1e-3;
  const long steps = 1'400'000;
  std::vector<Scalar> samples(static_cast<std::size_t>(steps) + 1, 1.5);
  DiscountedFunctional fn{0.99, steps, dt};
  CHECK(std::abs(lemma1_check(samples, fn)) < 2e-5);
}

TEST_CASE("lemma1 quadrature on a linearly decaying drive") {
  const Scalar horizon = 1400.0;
  auto run_at = [&](Scalar dt) {
    const long steps = static_cast<long>(std::llround(horizon / dt));
    std::vector<Scalar> samples(static_cast<std::size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) {
      const Scalar t = static_cast<Scalar>(k) * dt;
      samples[static_cast<std::size_t>(k)] = std::max(0.0, 1.0 - t);
    }
    return lemma1_check(samples, DiscountedFunctional{0.99, steps, dt});
  };
  const Scalar coarse = std::abs(run_at(1e-3));
  const Scalar fine = std::abs(run_at(5e-4));
  CHECK(coarse <= 10.0 * 1e-3);
  CHECK(fine <= 0.6 * coarse);  // residual shrinks linearly with dt
}

TEST_CASE("lemma1 randomized piecewise-linear trajectories") {
  const auto reports = verify::lemma1_suite(10);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].violations == 0);
  CHECK(reports[0].max_residual <= 10.0 * 1e-3);
  CHECK(reports[1].violations == 0);
  CHECK(reports[1].max_residual <= 0.6);
}

TEST_CASE("lemma1 horizon contract") {
  std::vector<Scalar> samples(101, 1.0);
  DiscountedFunctional fn{0.99, 100, 1e-3};  // gamma^0.1 is nowhere near 1e-6
  CHECK_THROWS_AS(lemma1_check(samples, fn), ContractViolation);
  DiscountedFunctional mismatch{0.99, 200, 1e-3};
  CHECK_THROWS_AS(lemma1_check(samples, mismatch), ContractViolation);
}
