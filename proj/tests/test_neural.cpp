#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "ctcs/neural.hpp"
#include "ctcs/rng.hpp"
#include "ctcs/verify.hpp"

using namespace ctcs;

namespace {

VecX vec(std::initializer_list<Scalar> values) {
  VecX v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const Scalar x : values) v[i++] = x;
  return v;
}

Scalar sigmoid(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("zeroed network maps everything to zero") {
  Approximator net({4, 8, 8, 3}, 5, 0.0);
  net.set_all_zero();
  const VecX out = net.forward(vec({1.0, -2.0, 0.5, 3.0}), NetMode::Eval);
  CHECK(out.isZero(0.0));
  // Zero final layer annihilates the input gradient even with live hidden units.
  Approximator scalar_net({3, 6, 1}, 6, 0.0);
  scalar_net.weight(scalar_net.layer_count() - 1).setZero();
  CHECK(scalar_net.grad_input(vec({0.2, -0.4, 1.0})).isZero(0.0));
}

TEST_CASE("toy sigmoid chain matches hand arithmetic") {
  Approximator net({1, 1, 1}, 1, 0.0);
  net.weight(0)(0, 0) = 0.7;
  net.bias(0)[0] = 0.1;
  net.weight(1)(0, 0) = -1.3;
  net.bias(1)[0] = 0.2;
  const Scalar x = 0.45;
  const Scalar expected = -1.3 * sigmoid(0.7 * x + 0.1) + 0.2;
  CHECK(net.forward(vec({x}), NetMode::Eval)[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evaluation mode is deterministic, training mode is not") {
  Approximator net({3, 16, 16, 2}, 9, 0.15);
  const VecX x = vec({0.3, -0.7, 1.1});
  const VecX a = net.forward(x, NetMode::Eval);
  const VecX b = net.forward(x, NetMode::Eval);
  CHECK(a == b);
  // Two train-mode passes draw different masks with overwhelming probability.
  const VecX t1 = net.forward(x, NetMode::Train);
  const VecX t2 = net.forward(x, NetMode::Train);
  CHECK(t1 != t2);
}

TEST_CASE("hidden activations stay inside (0,1)") {
  Approximator net({5, 32, 32, 1}, 10, 0.0);
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    VecX x(5);
    for (int i = 0; i < 5; ++i) x[i] = uniform_range(gen, -8.0, 8.0);
    net.forward(x, NetMode::Eval);
    for (const auto& h : net.cached_hidden()) {
      for (Eigen::Index i = 0; i < h.size(); ++i) {
        CHECK(h[i] > 0.0);
        CHECK(h[i] < 1.0);
      }
    }
  }
}

TEST_CASE("grad_params: zero upstream gives zero gradients") {
  Approximator net({3, 8, 2}, 11, 0.0);
  net.forward(vec({0.1, 0.2, 0.3}), NetMode::Eval);
  const ParamGrads grads = net.grad_params(VecX::Zero(2));
  CHECK(grad_global_norm(grads) == 0.0);
}

TEST_CASE("grad_params requires a cached forward pass") {
  Approximator net({2, 4, 1}, 12, 0.0);
  CHECK_THROWS_AS(net.grad_params(VecX::Ones(1)), ContractViolation);
  net.forward(vec({0.1, 0.2}), NetMode::Eval);
  CHECK_THROWS_AS(net.grad_params(VecX::Ones(2)), ContractViolation);  // wrong size
  CHECK_NOTHROW(net.grad_params(VecX::Ones(1)));
}

TEST_CASE("grad_input contracts") {
  Approximator net({3, 4, 2}, 13, 0.0);
  CHECK_THROWS_AS(net.grad_input(vec({1.0, 2.0, 3.0})), ContractViolation);  // two outputs
  Approximator scalar_net({3, 4, 1}, 13, 0.0);
  CHECK_THROWS_AS(scalar_net.grad_input(vec({1.0, 2.0})), ContractViolation);  // bad input size
}

TEST_CASE("gradients agree with finite differences") {
  // Toy networks at 1e-6 relative error, full-size at 1e-4.
  const auto reports = verify::gradients_suite();
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].max_residual <= 1e-6);
  CHECK(reports[1].max_residual <= 1e-6);
  CHECK(reports[2].max_residual <= 1e-4);
  CHECK(reports[3].max_residual <= 1e-4);
  for (const auto& r : reports) CHECK(r.violations == 0);
}

TEST_CASE("input gradient varies smoothly") {
  Approximator net({4, 24, 24, 1}, 14, 0.0);
  std::mt19937_64 gen(15);
  // Calibrate a local Lipschitz bound at one probe scale, then check a
  // finer scale stays under twice that bound.
  auto probe = [&](Scalar h) {
    Scalar worst = 0.0;
    std::mt19937_64 local(15);
    for (int trial = 0; trial < 30; ++trial) {
      VecX x(4), d(4);
      for (int i = 0; i < 4; ++i) {
        x[i] = uniform_range(local, -1.0, 1.0);
        d[i] = uniform_range(local, -1.0, 1.0);
      }
      d *= h / d.norm();
      const Scalar diff = (net.grad_input(x + d) - net.grad_input(x)).norm();
      worst = std::max(worst, diff / h);
    }
    return worst;
  };
  const Scalar lipschitz_coarse = probe(1e-3);
  const Scalar lipschitz_fine = probe(1e-4);
  CHECK(lipschitz_fine <= 2.0 * lipschitz_coarse + 1e-9);
  (void)gen;
}

TEST_CASE("adam: zero gradient from fresh moments leaves parameters unchanged") {
  Approximator net({2, 4, 1}, 16, 0.0);
  AdamState opt = make_adam(net);
  const MatX w0 = net.weight(0);
  ParamGrads zero;
  zero.weights = {MatX::Zero(4, 2), MatX::Zero(1, 4)};
  zero.biases = {VecX::Zero(4), VecX::Zero(1)};
  adam_step(net, zero, opt);
  CHECK(net.weight(0) == w0);
  CHECK(opt.step_count == 1);
}

TEST_CASE("adam: first step from zero moments follows the sign of the gradient") {
  Approximator net({1, 1, 1}, 17, 0.0);
  net.set_all_zero();
  AdamState opt = make_adam(net, 1e-3);
  ParamGrads grads;
  grads.weights = {MatX::Constant(1, 1, 0.37), MatX::Constant(1, 1, -2.0)};
  grads.biases = {VecX::Constant(1, 0.0), VecX::Constant(1, 5.0)};
  adam_step(net, grads, opt);
  // update = -lr * g / (|g| + eps) to first order
  CHECK(net.weight(0)(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(net.weight(1)(0, 0) == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(net.bias(0)[0] == 0.0);
  CHECK(net.bias(1)[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam: constant gradient moves at the asymptotic signed rate") {
  Approximator net({1, 1, 1}, 18, 0.0);
  net.set_all_zero();
  AdamState opt = make_adam(net, 1e-3);
  ParamGrads grads;
  grads.weights = {MatX::Constant(1, 1, 0.8), MatX::Constant(1, 1, 0.0)};
  grads.biases = {VecX::Zero(1), VecX::Zero(1)};
  const int steps = 3000;
  for (int i = 0; i < steps; ++i) adam_step(net, grads, opt);
  const Scalar mean_rate = net.weight(0)(0, 0) / steps;
  CHECK(mean_rate == doctest::Approx(-1e-3).epsilon(0.01));
}

TEST_CASE("gradient clipping rescales to the requested norm") {
  ParamGrads grads;
  grads.weights = {MatX::Constant(2, 2, 3.0)};
  grads.biases = {VecX::Constant(2, 4.0)};
  const Scalar norm = grad_global_norm(grads);
  CHECK(norm == doctest::Approx(std::sqrt(4 * 9.0 + 2 * 16.0)));
  clip_grads(grads, 1.0);
  CHECK(grad_global_norm(grads) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dropout stream is reproducible under a fixed seed") {
  Approximator a({4, 32, 32, 2}, 77, 0.15);
  Approximator b({4, 32, 32, 2}, 77, 0.15);
  const VecX x = vec({0.1, -0.2, 0.3, -0.4});
  for (int i = 0; i < 10; ++i) {
    CHECK(a.forward(x, NetMode::Train) == b.forward(x, NetMode::Train));
  }
  Approximator c({4, 32, 32, 2}, 78, 0.15);
  CHECK(a.forward(x, NetMode::Train) != c.forward(x, NetMode::Train));
}

TEST_CASE("soft update contracts the parameter distance by 1 - tau") {
  Approximator online({3, 8, 1}, 19, 0.0);
  Approximator target({3, 8, 1}, 20, 0.0);
  const Scalar tau = 0.25;
  const Scalar before = (target.weight(0) - online.weight(0)).norm();
  soft_update(target, online, tau);
  const Scalar after = (target.weight(0) - online.weight(0)).norm();
  CHECK(after == doctest::Approx((1.0 - tau) * before).epsilon(1e-12));
}

TEST_CASE("network and optimizer checkpoints round-trip bit-exactly") {
  Approximator net({5, 16, 16, 2}, 21, 0.15);
  AdamState opt = make_adam(net);
  // Leave some history in both the moments and the dropout stream.
  const VecX x = vec({0.1, 0.2, 0.3, 0.4, 0.5});
  for (int i = 0; i < 5; ++i) {
    net.forward(x, NetMode::Train);
    adam_step(net, net.grad_params(VecX::Ones(2)), opt);
  }
  std::stringstream buffer;
  save_network(buffer, net);
  save_adam(buffer, opt);
  Approximator restored = load_network(buffer);
  AdamState opt_restored = load_adam(buffer);

  REQUIRE(restored.layer_sizes() == net.layer_sizes());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    CHECK(restored.weight(l) == net.weight(l));
    CHECK(restored.bias(l) == net.bias(l));
    CHECK(opt_restored.m_weights[l] == opt.m_weights[l]);
    CHECK(opt_restored.v_weights[l] == opt.v_weights[l]);
  }
  CHECK(opt_restored.step_count == opt.step_count);
  // The dropout stream continues identically.
  CHECK(restored.forward(x, NetMode::Train) == net.forward(x, NetMode::Train));

  std::stringstream bad("XXXX????");
  CHECK_THROWS_AS(load_network(bad), IoError);
}
