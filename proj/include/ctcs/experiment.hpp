#pragma once

#include <filesystem>

#include "ctcs/config.hpp"
#include "ctcs/learner.hpp"
#include "ctcs/telemetry.hpp"

namespace ctcs {

struct ExperimentResult {
  EpisodeLog log;
  RunSummary summary;
  WorldState final_state;
  LearnerState learner;
};

/// One complete, deterministic experiment: build the world and learner from
/// the configuration, run the learning loop, and summarize the telemetry.
ExperimentResult run_experiment(const RunConfig& cfg, std::uint64_t seed);

/// Writes telemetry.csv, summary.json, checkpoint.bin, and (for nonempty
/// logs) the four SVG plots into `dir`, creating it if needed.
void write_outputs(const ExperimentResult& result, const RunConfig& cfg,
                   const std::filesystem::path& dir);

}  // namespace ctcs
