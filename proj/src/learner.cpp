#include "ctcs/learner.hpp"

#include <cmath>
#include <fstream>

#include "ctcs/rng.hpp"

namespace ctcs {

namespace {

constexpr int kStateDim = 6;
constexpr int kControlDim = 6;

VecX joint_input(const Vec6& zeta, const Control& u) {
  VecX x(kStateDim + kControlDim);
  x << zeta, u.values;
  return x;
}

// Action value with the state's input gradient precomputed, so selection
// evaluates grad J once per step instead of once per action.
Scalar action_value_with_grad(const WorldState& state, ActionId id, LearnerState& learner,
                              const EnvModel& env, const DriveConfig& drive_cfg,
                              const LearnerConfig& cfg, const Vec6& zeta, const VecX& grad_j) {
  const Control u = resolve_control(state, id, env.arena);
  const VecX f = learner.f_hat.forward(joint_input(zeta, u), NetMode::Eval);
  const Vec4 delta_next = state.delta + f.head<4>() * cfg.dt;
  return drive(delta_next, drive_cfg) + grad_j.dot(f);
}

void apply_update(Approximator& net, AdamState& opt, ParamGrads& grads, const LearnerConfig& cfg,
                  long& clip_events) {
  if (cfg.grad_clip_norm > 0.0 && grad_global_norm(grads) > cfg.grad_clip_norm) {
    clip_grads(grads, cfg.grad_clip_norm);
    ++clip_events;
  }
  adam_step(net, grads, opt);
}

}  // namespace

void validate(const LearnerConfig& cfg) {
  if (!(cfg.epsilon_explore >= 0.0 && cfg.epsilon_explore <= 1.0)) {
    throw ContractViolation("learner config: epsilon_explore must lie in [0,1]");
  }
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) {
    throw ContractViolation("learner config: gamma must lie in (0,1)");
  }
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) {
    throw ContractViolation("learner config: tau must lie in (0,1]");
  }
  if (!(cfg.dt > 0.0)) throw ContractViolation("learner config: dt must be positive");
  if (cfg.iterations < 0) throw ContractViolation("learner config: iterations must be >= 0");
  if (cfg.hidden_units <= 0) throw ContractViolation("learner config: hidden_units must be > 0");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw ContractViolation("learner config: dropout_rate must lie in [0,1)");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw ContractViolation("learner config: learning_rate must be positive");
  }
  if (!(cfg.grad_clip_norm >= 0.0)) {
    throw ContractViolation("learner config: grad_clip_norm must be >= 0");
  }
}

LearnerState make_learner(const LearnerConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  LearnerState learner;
  const int h = cfg.hidden_units;
  learner.f_hat = Approximator({kStateDim + kControlDim, h, h, kStateDim}, mix_seed(seed, 1),
                               cfg.dropout_rate);
  learner.j_hat = Approximator({kStateDim, h, h, 1}, mix_seed(seed, 2), cfg.dropout_rate);
  learner.j_target = learner.j_hat;
  learner.adam_f = make_adam(learner.f_hat, cfg.learning_rate);
  learner.adam_j = make_adam(learner.j_hat, cfg.learning_rate);
  learner.explore_rng.seed(mix_seed(seed, 3));
  return learner;
}

Vec6 state_vector(const WorldState& state) {
  Vec6 zeta;
  zeta << state.delta, state.position;
  return zeta;
}

Scalar hjb_action_value(const WorldState& state, const ActionSpec& action, LearnerState& learner,
                        const EnvModel& env, const DriveConfig& drive_cfg,
                        const LearnerConfig& cfg) {
  const Vec6 zeta = state_vector(state);
  const VecX grad_j = learner.j_hat.grad_input(zeta);
  return action_value_with_grad(state, action.id, learner, env, drive_cfg, cfg, zeta, grad_j);
}

std::pair<ActionSpec, bool> select_action(const WorldState& state, LearnerState& learner,
                                          const EnvModel& env, const DriveConfig& drive_cfg,
                                          const LearnerConfig& cfg,
                                          const std::vector<ActionSpec>& admissible) {
  if (admissible.empty()) {
    throw ContractViolation("select_action: admissible set must be nonempty");
  }
  const Scalar coin = uniform01(learner.explore_rng);
  if (coin < cfg.epsilon_explore) {
    return {admissible[uniform_index(learner.explore_rng, admissible.size())], true};
  }
  const Vec6 zeta = state_vector(state);
  const VecX grad_j = learner.j_hat.grad_input(zeta);
  std::size_t best = 0;
  Scalar best_value = action_value_with_grad(state, admissible[0].id, learner, env, drive_cfg,
                                             cfg, zeta, grad_j);
  for (std::size_t i = 1; i < admissible.size(); ++i) {
    const Scalar value = action_value_with_grad(state, admissible[i].id, learner, env, drive_cfg,
                                                cfg, zeta, grad_j);
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  return {admissible[best], false};
}

Scalar update_transition(LearnerState& learner, const Vec6& zeta_k, const Control& u_k,
                         const Vec6& zeta_next, const LearnerConfig& cfg) {
  const VecX out = learner.f_hat.forward(joint_input(zeta_k, u_k), NetMode::Train);
  const VecX residual = zeta_next - zeta_k - out * cfg.dt;
  const Scalar loss = residual.squaredNorm();
  ParamGrads grads = learner.f_hat.grad_params(-2.0 * cfg.dt * residual);
  apply_update(learner.f_hat, learner.adam_f, grads, cfg, learner.grad_clip_events);
  return loss;
}

Scalar hjb_residual(Scalar drive_next, Scalar grad_j_dot_f, Scalar j_value, Scalar gamma) {
  return drive_next + grad_j_dot_f + std::log(gamma) * j_value;
}

Scalar update_deviation(LearnerState& learner, const Vec6& zeta_k, const Control& u_k,
                        const Vec4& delta_next, const DriveConfig& drive_cfg,
                        const LearnerConfig& cfg) {
  const VecX f_value = learner.f_hat.forward(joint_input(zeta_k, u_k), NetMode::Eval);
  const Approximator& grad_source =
      cfg.target_mode == TargetMode::SemiGradient ? learner.j_target : learner.j_hat;
  const VecX grad_j = grad_source.grad_input(zeta_k);
  const Scalar j_value = learner.j_hat.forward(zeta_k, NetMode::Train)[0];
  const Scalar residual =
      hjb_residual(drive(delta_next, drive_cfg), grad_j.dot(f_value), j_value, cfg.gamma);
  const Scalar loss = residual * residual;

  VecX upstream(1);
  upstream << 2.0 * residual * std::log(cfg.gamma);
  ParamGrads grads = learner.j_hat.grad_params(upstream);
  apply_update(learner.j_hat, learner.adam_j, grads, cfg, learner.grad_clip_events);
  if (cfg.target_mode == TargetMode::SemiGradient) {
    soft_update(learner.j_target, learner.j_hat, cfg.tau);
  }
  return loss;
}

RunOutcome run(LearnerState& learner, const WorldState& start, const EnvModel& env,
               const DriveConfig& drive_cfg, const LearnerConfig& cfg, TelemetrySink& sink,
               long k_begin, const std::filesystem::path& abort_checkpoint) {
  validate(cfg);
  if (std::abs(env.body.dt - cfg.dt) > 0.0) {
    throw ContractViolation("run: environment and learner must share the same dt");
  }
  WorldState state = start;
  for (long k = k_begin + 1; k <= cfg.iterations; ++k) {
    const auto admissible = admissible_actions(state, env.arena, env.thresholds,
                                               env.body.setpoint);
    const auto [action, explored] = select_action(state, learner, env, drive_cfg, cfg, admissible);
    const Control u = resolve_control(state, action.id, env.arena);
    const WorldState next = step(state, action, env.body, env.arena, env.thresholds);

    const Vec6 zeta_k = state_vector(state);
    const Vec6 zeta_next = state_vector(next);
    const Scalar loss_f = update_transition(learner, zeta_k, u, zeta_next, cfg);
    const Scalar loss_j = update_deviation(learner, zeta_k, u, next.delta, drive_cfg, cfg);

    const Vec4 levels = levels_from_deviation(next.delta, env.body.setpoint);
    StepRecord rec;
    rec.step = k;
    rec.clock = next.clock;
    rec.level1 = levels[0];
    rec.level2 = levels[1];
    rec.fatigue_m = levels[2];
    rec.fatigue_s = levels[3];
    rec.drive = drive(next.delta, drive_cfg);
    rec.reward = reward_discrete(state.delta, next.delta, env.body.dt, drive_cfg);
    rec.loss_f = loss_f;
    rec.loss_j = loss_j;
    rec.action = action.id;
    rec.explored = explored;
    rec.pos_x = next.position[0];
    rec.pos_y = next.position[1];
    try {
      sink.on_record(rec);
    } catch (const std::exception& e) {
      if (!abort_checkpoint.empty()) {
        save_checkpoint(abort_checkpoint, learner, next, k);
      }
      throw RunAborted(std::string("telemetry sink failed at step ") + std::to_string(k) + ": " +
                           e.what(),
                       abort_checkpoint);
    }
    state = next;
  }
  return RunOutcome{state, cfg.iterations};
}

void save_checkpoint(std::ostream& os, const LearnerState& learner, const WorldState& world,
                     long iteration) {
  os.write("CCKP", 4);
  const std::uint32_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  os.write(reinterpret_cast<const char*>(&iteration), sizeof(iteration));
  os.write(reinterpret_cast<const char*>(world.delta.data()), 4 * sizeof(Scalar));
  os.write(reinterpret_cast<const char*>(world.position.data()), 2 * sizeof(Scalar));
  os.write(reinterpret_cast<const char*>(&world.clock), sizeof(world.clock));
  os.write(reinterpret_cast<const char*>(&world.sleep_steps_remaining),
           sizeof(world.sleep_steps_remaining));
  os.write(reinterpret_cast<const char*>(&learner.grad_clip_events),
           sizeof(learner.grad_clip_events));
  if (!os) throw IoError("checkpoint write failed");
  save_network(os, learner.f_hat);
  save_network(os, learner.j_hat);
  save_network(os, learner.j_target);
  save_adam(os, learner.adam_f);
  save_adam(os, learner.adam_j);
  save_rng(os, learner.explore_rng);
}

void save_checkpoint(const std::filesystem::path& path, const LearnerState& learner,
                     const WorldState& world, long iteration) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  save_checkpoint(os, learner, world, iteration);
  if (!os) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(std::istream& is) {
  char tag[4];
  is.read(tag, 4);
  if (!is || std::string(tag, 4) != "CCKP") throw IoError("checkpoint: bad file tag");
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!is || version != 1) throw IoError("checkpoint: unsupported version");
  Checkpoint ckpt;
  is.read(reinterpret_cast<char*>(&ckpt.iteration), sizeof(ckpt.iteration));
  is.read(reinterpret_cast<char*>(ckpt.world.delta.data()), 4 * sizeof(Scalar));
  is.read(reinterpret_cast<char*>(ckpt.world.position.data()), 2 * sizeof(Scalar));
  is.read(reinterpret_cast<char*>(&ckpt.world.clock), sizeof(ckpt.world.clock));
  is.read(reinterpret_cast<char*>(&ckpt.world.sleep_steps_remaining),
          sizeof(ckpt.world.sleep_steps_remaining));
  is.read(reinterpret_cast<char*>(&ckpt.learner.grad_clip_events),
          sizeof(ckpt.learner.grad_clip_events));
  if (!is) throw IoError("checkpoint: truncated header");
  ckpt.learner.f_hat = load_network(is);
  ckpt.learner.j_hat = load_network(is);
  ckpt.learner.j_target = load_network(is);
  ckpt.learner.adam_f = load_adam(is);
  ckpt.learner.adam_j = load_adam(is);
  ckpt.learner.explore_rng = load_rng(is);
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  return load_checkpoint(is);
}

}  // namespace ctcs
