#pragma once

#include <string>
#include <vector>

#include "ctcs/config.hpp"
#include "ctcs/drive_reward.hpp"
#include "ctcs/neural.hpp"

namespace ctcs::verify {

struct SuiteReport {
  std::string property;
  long trials = 0;
  long violations = 0;
  Scalar max_residual = 0.0;
  std::string first_counterexample;
};

/// Piecewise-linear function on uniformly spaced knots, clamped past the
/// last knot. Used to generate random drive trajectories.
struct PiecewiseLinear {
  std::vector<Scalar> knot_values;
  Scalar knot_spacing = 1.0;
  Scalar at(Scalar t) const;
};

PiecewiseLinear random_drive_trajectory(std::uint64_t seed, Scalar horizon_time,
                                        Scalar knot_spacing = 10.0, Scalar lo = 0.0,
                                        Scalar hi = 2.0);

std::vector<Scalar> sample_trajectory(const PiecewiseLinear& f, long steps, Scalar dt);

/// Quadrature residuals of the value/deviation identity over random
/// piecewise-linear drives, at dt = 1e-3 and dt/2. Two reports: the residual
/// bound (10 * dt) and the refinement ratio bound (0.6).
std::vector<SuiteReport> lemma1_suite(int trajectories = 100);

/// The three derivative sign properties over randomized consumption
/// scenarios; case-boundary neighborhoods are excluded by regeneration.
std::vector<SuiteReport> signs_suite(long trials = 1000);

/// Backpropagation versus central finite differences on toy and full-size
/// networks, dropout disabled.
std::vector<SuiteReport> gradients_suite();

/// Behavioural-constraint audit over one full default run.
std::vector<SuiteReport> constraints_suite();

std::string report_json(const std::vector<SuiteReport>& reports);

/// Largest relative error between analytic parameter gradients of
/// (upstream . output) and central finite differences over `samples`
/// randomly chosen parameters.
Scalar max_param_grad_rel_err(Approximator& net, const VecX& input, const VecX& upstream,
                              int samples, std::uint64_t seed);

/// Largest relative error of the input gradient of a scalar-output network
/// against central finite differences, over all input components.
Scalar max_input_grad_rel_err(Approximator& net, const VecX& input);

}  // namespace ctcs::verify
