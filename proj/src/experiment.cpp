#include "ctcs/experiment.hpp"

#include <fstream>

namespace ctcs {

ExperimentResult run_experiment(const RunConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const EnvModel env = make_env(cfg);
  validate(env.arena);
  validate(env.thresholds);
  const DriveConfig drive_cfg = make_drive_config(cfg);
  const LearnerConfig learner_cfg = make_learner_config(cfg);

  ExperimentResult result;
  result.learner = make_learner(learner_cfg, seed);
  result.log.seed = seed;
  result.log.config_hash = config_hash_hex(cfg);

  LogSink sink(result.log);
  const RunOutcome outcome =
      run(result.learner, make_start_state(cfg), env, drive_cfg, learner_cfg, sink);
  result.final_state = outcome.final_state;
  result.summary = summarize(initial_levels(cfg), result.log, env.arena, env.thresholds,
                             result.learner.grad_clip_events);
  return result;
}

void write_outputs(const ExperimentResult& result, const RunConfig& cfg,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec && !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory: " + dir.string());
  }
  emit_csv(result.log, dir / "telemetry.csv");
  {
    std::ofstream os(dir / "summary.json", std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + (dir / "summary.json").string());
    os << summary_json(result.summary);
  }
  save_checkpoint(dir / "checkpoint.bin", result.learner, result.final_state,
                  static_cast<long>(result.log.records.size()));
  if (!result.log.records.empty()) {
    emit_plots(result.log, dir, make_arena(cfg), make_body(cfg).setpoint,
               static_cast<int>(cfg.svg_stride));
  }
}

}  // namespace ctcs
