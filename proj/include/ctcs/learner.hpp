#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "ctcs/drive_reward.hpp"
#include "ctcs/environment.hpp"
#include "ctcs/neural.hpp"
#include "ctcs/telemetry.hpp"

namespace ctcs {

/// Where the input-gradient term of the deviation loss comes from:
/// the slowly-tracking target copy (default) or the online network itself.
/// In both cases that term is held constant during backpropagation; only
/// the log(gamma) * J(zeta) term is differentiated.
enum class TargetMode { None, SemiGradient };

struct LearnerConfig {
  Scalar epsilon_explore = 0.3;
  Scalar gamma = 0.99;
  Scalar tau = 0.001;
  Scalar dt = 0.01;
  long iterations = 14000;
  TargetMode target_mode = TargetMode::SemiGradient;
  Scalar grad_clip_norm = 0.0;  // 0 disables clipping
  int hidden_units = 128;
  Scalar dropout_rate = 0.15;
  Scalar learning_rate = 1e-3;
};

void validate(const LearnerConfig& cfg);

/// The transition model, the deviation estimate, its target copy, their
/// optimizers, and the exploration stream.
struct LearnerState {
  Approximator f_hat;    // (state, control) -> state rate, 12 -> h -> h -> 6
  Approximator j_hat;    // state -> discounted future drive, 6 -> h -> h -> 1
  Approximator j_target;
  AdamState adam_f;
  AdamState adam_j;
  std::mt19937_64 explore_rng;
  long grad_clip_events = 0;
};

LearnerState make_learner(const LearnerConfig& cfg, std::uint64_t seed);

struct EnvModel {
  Arena arena;
  BodyParams body;
  Thresholds thresholds;
};

/// [deviations; position] as fed to both networks.
Vec6 state_vector(const WorldState& state);

/// d(delta after one modeled step) + grad J(zeta) . f_hat(zeta, u_a),
/// evaluated without dropout. Lower is better.
Scalar hjb_action_value(const WorldState& state, const ActionSpec& action, LearnerState& learner,
                        const EnvModel& env, const DriveConfig& drive_cfg,
                        const LearnerConfig& cfg);

/// Epsilon-greedy over the admissible set; greedy ties break toward the
/// lowest action id. Returns the choice and whether it was exploratory.
std::pair<ActionSpec, bool> select_action(const WorldState& state, LearnerState& learner,
                                          const EnvModel& env, const DriveConfig& drive_cfg,
                                          const LearnerConfig& cfg,
                                          const std::vector<ActionSpec>& admissible);

/// Squared-residual regression of the observed transition onto
/// f_hat(zeta, u) * dt; one Adam step. Returns the pre-update loss.
Scalar update_transition(LearnerState& learner, const Vec6& zeta_k, const Control& u_k,
                         const Vec6& zeta_next, const LearnerConfig& cfg);

/// The scalar residual of the deviation update:
/// d_next + gradJ.f + log(gamma) * j_value.
Scalar hjb_residual(Scalar drive_next, Scalar grad_j_dot_f, Scalar j_value, Scalar gamma);

/// Squares the residual, backpropagates through the log(gamma) * J term,
/// Adam-steps j_hat, then soft-updates the target copy. Returns the
/// pre-update loss.
Scalar update_deviation(LearnerState& learner, const Vec6& zeta_k, const Control& u_k,
                        const Vec4& delta_next, const DriveConfig& drive_cfg,
                        const LearnerConfig& cfg);

class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual void on_record(const StepRecord& rec) = 0;
};

class LogSink : public TelemetrySink {
 public:
  explicit LogSink(EpisodeLog& log) : log_(&log) {}
  void on_record(const StepRecord& rec) override { log_->record(rec); }

 private:
  EpisodeLog* log_;
};

/// Raised when the telemetry sink fails mid-run; by then a resumable
/// checkpoint has been written to the configured abort path (if any).
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, std::filesystem::path checkpoint)
      : std::runtime_error(what), checkpoint_path(std::move(checkpoint)) {}
  std::filesystem::path checkpoint_path;
};

struct RunOutcome {
  WorldState final_state;
  long last_iteration = 0;
};

/// Executes iterations k_begin+1 .. cfg.iterations of the select / step /
/// update loop, reporting each step to the sink. Fully deterministic for a
/// fixed learner state and seed.
RunOutcome run(LearnerState& learner, const WorldState& start, const EnvModel& env,
               const DriveConfig& drive_cfg, const LearnerConfig& cfg, TelemetrySink& sink,
               long k_begin = 0, const std::filesystem::path& abort_checkpoint = {});

struct Checkpoint {
  LearnerState learner;
  WorldState world;
  long iteration = 0;
};

void save_checkpoint(std::ostream& os, const LearnerState& learner, const WorldState& world,
                     long iteration);
void save_checkpoint(const std::filesystem::path& path, const LearnerState& learner,
                     const WorldState& world, long iteration);
Checkpoint load_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ctcs
