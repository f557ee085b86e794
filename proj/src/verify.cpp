#include "ctcs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctcs/experiment.hpp"
#include "ctcs/rng.hpp"
#include "json.hpp"

namespace ctcs::verify {

namespace {

constexpr Scalar kLemmaDt = 1e-3;
constexpr Scalar kLemmaHorizon = 1400.0;  // gamma^T < 1e-6 at gamma = 0.99

std::string describe_scenario(const ConsumptionScenario& s) {
  std::ostringstream ss;
  ss << "delta0=[" << s.delta0.transpose() << "] m=" << s.m << " t=" << s.t;
  return ss.str();
}

}  // namespace

Scalar PiecewiseLinear::at(Scalar t) const {
  if (knot_values.empty()) return 0.0;
  const Scalar pos = t / knot_spacing;
  const auto last = static_cast<Scalar>(knot_values.size() - 1);
  if (pos <= 0.0) return knot_values.front();
  if (pos >= last) return knot_values.back();
  const auto idx = static_cast<std::size_t>(pos);
  const Scalar frac = pos - static_cast<Scalar>(idx);
  return knot_values[idx] * (1.0 - frac) + knot_values[idx + 1] * frac;
}

PiecewiseLinear random_drive_trajectory(std::uint64_t seed, Scalar horizon_time,
                                        Scalar knot_spacing, Scalar lo, Scalar hi) {
  PiecewiseLinear f;
  f.knot_spacing = knot_spacing;
  const auto knots = static_cast<std::size_t>(horizon_time / knot_spacing) + 2;
  std::mt19937_64 gen(seed);
  f.knot_values.resize(knots);
  for (auto& v : f.knot_values) v = uniform_range(gen, lo, hi);
  return f;
}

std::vector<Scalar> sample_trajectory(const PiecewiseLinear& f, long steps, Scalar dt) {
  std::vector<Scalar> samples(static_cast<std::size_t>(steps) + 1);
  // Walk the knot segments directly; per-sample interpolation would cost a
  // division on every one of the millions of samples.
  const long last_knot = static_cast<long>(f.knot_values.size()) - 1;
  const Scalar inv_spacing = 1.0 / f.knot_spacing;
  long knot = 0;
  for (long k = 0; k <= steps; ++k) {
    const Scalar t = static_cast<Scalar>(k) * dt;
    while (knot < last_knot && t >= static_cast<Scalar>(knot + 1) * f.knot_spacing) ++knot;
    if (knot >= last_knot) {
      samples[static_cast<std::size_t>(k)] = f.knot_values.back();
      continue;
    }
    const Scalar frac = (t - static_cast<Scalar>(knot) * f.knot_spacing) * inv_spacing;
    samples[static_cast<std::size_t>(k)] =
        f.knot_values[static_cast<std::size_t>(knot)] * (1.0 - frac) +
        f.knot_values[static_cast<std::size_t>(knot) + 1] * frac;
  }
  return samples;
}

std::vector<SuiteReport> lemma1_suite(int trajectories) {
  SuiteReport coarse;
  coarse.property = "lemma1";
  coarse.trials = trajectories;
  SuiteReport halving;
  halving.property = "lemma1_halving";
  halving.trials = trajectories;

  const Scalar bound = 10.0 * kLemmaDt;
  Scalar max_coarse = 0.0;
  Scalar max_fine = 0.0;
  for (int i = 0; i < trajectories; ++i) {
    const PiecewiseLinear f =
        random_drive_trajectory(mix_seed(0xC7C5001, static_cast<std::uint64_t>(i)), kLemmaHorizon);
    for (const Scalar dt : {kLemmaDt, kLemmaDt / 2}) {
      const long steps = static_cast<long>(std::llround(kLemmaHorizon / dt));
      DiscountedFunctional fn;
      fn.gamma = 0.99;
      fn.horizon_steps = steps;
      fn.step = dt;
      const auto samples = sample_trajectory(f, steps, dt);
      const Scalar residual = std::abs(lemma1_check(samples, fn));
      if (dt == kLemmaDt) {
        max_coarse = std::max(max_coarse, residual);
        if (residual > bound) {
          ++coarse.violations;
          if (coarse.first_counterexample.empty()) {
            coarse.first_counterexample =
                "trajectory " + std::to_string(i) + ": |residual| = " + std::to_string(residual);
          }
        }
      } else {
        max_fine = std::max(max_fine, residual);
      }
    }
  }
  coarse.max_residual = max_coarse;
  const Scalar ratio = max_coarse > 0.0 ? max_fine / max_coarse : 0.0;
  halving.max_residual = ratio;
  if (ratio > 0.6) {
    halving.violations = 1;
    halving.first_counterexample =
        "max residual shrank only by factor " + std::to_string(ratio) + " when dt halved";
  }
  return {coarse, halving};
}

std::vector<SuiteReport> signs_suite(long trials) {
  std::vector<SuiteReport> reports;
  const char* names[3] = {"signs_deprivation", "signs_cross_need", "signs_dose"};
  for (int property = 0; property < 3; ++property) {
    SuiteReport report;
    report.property = names[property];
    std::mt19937_64 gen(mix_seed(0xC7C5002, static_cast<std::uint64_t>(property)));
    long done = 0;
    long attempts = 0;
    while (done < trials && attempts < trials * 50) {
      ++attempts;
      ConsumptionScenario s;
      s.delta0 = VecX(2);
      for (int i = 0; i < 2; ++i) {
        const Scalar sign = uniform01(gen) < 0.5 ? -1.0 : 1.0;
        s.delta0[i] = sign * uniform_range(gen, 0.01, 5.0);
      }
      s.m = uniform_range(gen, 0.01, 1.0);
      s.t = uniform_range(gen, 0.0, 2.0);
      SignReport r;
      switch (property) {
        case 0: r = sign_property_deprivation(s); break;
        case 1: r = sign_property_cross_need(s); break;
        default: r = sign_property_dose(s); break;
      }
      if (r.skipped) continue;
      ++done;
      if (!r.holds) {
        ++report.violations;
        report.max_residual = std::max(report.max_residual, std::abs(r.derivative));
        if (report.first_counterexample.empty()) {
          report.first_counterexample = describe_scenario(s) +
                                        " derivative=" + std::to_string(r.derivative) +
                                        " case_sign=" + std::to_string(r.case_sign);
        }
      }
    }
    report.trials = done;
    reports.push_back(report);
  }
  return reports;
}

Scalar max_param_grad_rel_err(Approximator& net, const VecX& input, const VecX& upstream,
                              int samples, std::uint64_t seed) {
  net.forward(input, NetMode::Eval);
  const ParamGrads grads = net.grad_params(upstream);

  // Flat index space over all weights then all biases, sampled uniformly.
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  std::mt19937_64 gen(seed);
  long total = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    total += net.weight(l).size() + net.bias(l).size();
  }
  for (int i = 0; i < samples; ++i) {
    long flat = static_cast<long>(uniform_index(gen, static_cast<std::size_t>(total)));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      if (flat < net.weight(l).size()) {
        coords.emplace_back(l, flat);
        break;
      }
      flat -= net.weight(l).size();
      if (flat < net.bias(l).size()) {
        coords.emplace_back(l + net.layer_count(), flat);
        break;
      }
      flat -= net.bias(l).size();
    }
  }

  const Scalar h = 1e-5;
  Scalar max_err = 0.0;
  for (const auto& [slot, flat] : coords) {
    const bool is_bias = slot >= net.layer_count();
    const std::size_t layer = is_bias ? slot - net.layer_count() : slot;
    Scalar* param = is_bias ? net.bias(layer).data() + flat : net.weight(layer).data() + flat;
    const Scalar analytic = is_bias ? grads.biases[layer](flat)
                                    : *(grads.weights[layer].data() + flat);
    const Scalar saved = *param;
    *param = saved + h;
    const Scalar plus = upstream.dot(net.forward(input, NetMode::Eval));
    *param = saved - h;
    const Scalar minus = upstream.dot(net.forward(input, NetMode::Eval));
    *param = saved;
    const Scalar fd = (plus - minus) / (2.0 * h);
    const Scalar denom = std::max({std::abs(fd), std::abs(analytic), Scalar(1e-8)});
    max_err = std::max(max_err, std::abs(fd - analytic) / denom);
  }
  // Restore a coherent cache for any later gradient call.
  net.forward(input, NetMode::Eval);
  return max_err;
}

Scalar max_input_grad_rel_err(Approximator& net, const VecX& input) {
  const VecX analytic = net.grad_input(input);
  const Scalar h = 1e-5;
  Scalar max_err = 0.0;
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    VecX x = input;
    x[i] = input[i] + h;
    const Scalar plus = net.forward(x, NetMode::Eval)[0];
    x[i] = input[i] - h;
    const Scalar minus = net.forward(x, NetMode::Eval)[0];
    const Scalar fd = (plus - minus) / (2.0 * h);
    const Scalar denom = std::max({std::abs(fd), std::abs(analytic[i]), Scalar(1e-8)});
    max_err = std::max(max_err, std::abs(fd - analytic[i]) / denom);
  }
  return max_err;
}

std::vector<SuiteReport> gradients_suite() {
  std::vector<SuiteReport> reports;
  std::mt19937_64 gen(mix_seed(0xC7C5003, 0));
  auto random_vec = [&](int n) {
    VecX v(n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform_range(gen, -1.0, 1.0);
    return v;
  };

  {
    SuiteReport r;
    r.property = "gradients_params_toy";
    Scalar worst = 0.0;
    Approximator tiny({1, 1, 1}, 7, 0.0);
    worst = std::max(worst, max_param_grad_rel_err(tiny, random_vec(1), random_vec(1), 4, 11));
    Approximator small({3, 5, 2}, 8, 0.0);
    worst = std::max(worst, max_param_grad_rel_err(small, random_vec(3), random_vec(2), 27, 12));
    r.trials = 31;
    r.max_residual = worst;
    if (worst > 1e-6) {
      r.violations = 1;
      r.first_counterexample = "toy parameter gradient rel err " + std::to_string(worst);
    }
    reports.push_back(r);
  }
  {
    SuiteReport r;
    r.property = "gradients_input_toy";
    Approximator small({3, 4, 1}, 9, 0.0);
    const Scalar worst = max_input_grad_rel_err(small, random_vec(3));
    r.trials = 3;
    r.max_residual = worst;
    if (worst > 1e-6) {
      r.violations = 1;
      r.first_counterexample = "toy input gradient rel err " + std::to_string(worst);
    }
    reports.push_back(r);
  }
  {
    SuiteReport r;
    r.property = "gradients_params_full";
    Scalar worst = 0.0;
    Approximator f_shape({12, 128, 128, 6}, 21, 0.15);
    worst = std::max(worst,
                     max_param_grad_rel_err(f_shape, random_vec(12), random_vec(6), 100, 31));
    Approximator j_shape({6, 128, 128, 1}, 22, 0.15);
    worst = std::max(worst,
                     max_param_grad_rel_err(j_shape, random_vec(6), random_vec(1), 100, 32));
    r.trials = 200;
    r.max_residual = worst;
    if (worst > 1e-4) {
      r.violations = 1;
      r.first_counterexample = "full-size parameter gradient rel err " + std::to_string(worst);
    }
    reports.push_back(r);
  }
  {
    SuiteReport r;
    r.property = "gradients_input_full";
    Approximator j_shape({6, 128, 128, 1}, 23, 0.15);
    const Scalar worst = max_input_grad_rel_err(j_shape, random_vec(6));
    r.trials = 6;
    r.max_residual = worst;
    if (worst > 1e-4) {
      r.violations = 1;
      r.first_counterexample = "full-size input gradient rel err " + std::to_string(worst);
    }
    reports.push_back(r);
  }
  return reports;
}

std::vector<SuiteReport> constraints_suite() {
  RunConfig cfg = default_run_config();
  cfg.iterations = 14000;
  const ExperimentResult result = run_experiment(cfg, 1);
  const ConstraintAudit audit = audit_constraints(initial_levels(cfg), result.log,
                                                  make_arena(cfg), make_thresholds(cfg));
  SuiteReport r;
  r.property = "constraints";
  r.trials = static_cast<long>(result.log.records.size());
  r.violations = audit.total();
  if (audit.total() > 0) {
    std::ostringstream ss;
    ss << "walk_with_high_fatigue=" << audit.walk_with_high_fatigue
       << " non_sleep_when_forced=" << audit.non_sleep_when_forced
       << " short_sleep_bouts=" << audit.short_sleep_bouts
       << " out_of_bounds=" << audit.out_of_bounds;
    r.first_counterexample = ss.str();
  }
  return {r};
}

std::string report_json(const std::vector<SuiteReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["property"] = r.property;
    j["trials"] = r.trials;
    j["violations"] = r.violations;
    j["max_residual"] = r.max_residual;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace ctcs::verify
