#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctcs/core_state.hpp"
#include "ctcs/environment.hpp"
#include "ctcs/types.hpp"

namespace ctcs {

/// One row of per-step telemetry. Levels, fatigues, position, and clock
/// describe the state after the step; the losses are the pre-update values
/// of that step's two regressions.
struct StepRecord {
  long step = 0;
  Scalar clock = 0;
  Scalar level1 = 0;
  Scalar level2 = 0;
  Scalar fatigue_m = 0;
  Scalar fatigue_s = 0;
  Scalar drive = 0;
  Scalar reward = 0;
  Scalar loss_f = 0;
  Scalar loss_j = 0;
  ActionId action = ActionId::Idle;
  bool explored = false;
  Scalar pos_x = 0;
  Scalar pos_y = 0;
};

struct EpisodeLog {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = kVersion;
  std::vector<StepRecord> records;

  /// Appends one record. Step indices must start at 1 and increase by one;
  /// anything else throws ContractViolation.
  void record(const StepRecord& rec);
};

inline constexpr const char* kCsvSchemaTag = "# ctcs-hrrl v1";

/// Fixed column order, floats at 9 significant digits, LF newlines.
std::string to_csv(const EpisodeLog& log);
void emit_csv(const EpisodeLog& log, const std::filesystem::path& path);

EpisodeLog parse_csv_string(const std::string& text);
EpisodeLog parse_csv(const std::filesystem::path& path);

/// Writes levels.svg, fatigues.svg, loss_j.svg, and track.svg into `dir`.
/// Pure function of its arguments; emitting twice produces identical bytes.
/// The stride downsamples the plotted points only, never the data itself.
void emit_plots(const EpisodeLog& log, const std::filesystem::path& dir, const Arena& arena,
                const SetPoint& setpoint, int stride = 1);

struct ConstraintAudit {
  long walk_with_high_fatigue = 0;
  long non_sleep_when_forced = 0;
  long short_sleep_bouts = 0;
  long out_of_bounds = 0;
  long total() const {
    return walk_with_high_fatigue + non_sleep_when_forced + short_sleep_bouts + out_of_bounds;
  }
};

/// Re-checks the behavioural constraints over a finished trajectory,
/// independently of the environment's own admissibility filter. Fatigue
/// thresholds are evaluated against the state each action was taken from.
/// A sleep bout cut short by the end of the log is not a violation.
ConstraintAudit audit_constraints(const Vec4& initial_levels, const EpisodeLog& log,
                                  const Arena& arena, const Thresholds& th);

struct RunSummary {
  std::uint64_t seed = 0;
  long iterations = 0;
  Scalar final_mean_drive = 0;
  Scalar explored_fraction = 0;
  long constraint_violations = 0;
  long grad_clip_events = 0;
  std::string config_hash;
  std::string version = kVersion;
};

/// final_mean_drive averages the drive over the last tenth of the records.
RunSummary summarize(const Vec4& initial_levels, const EpisodeLog& log, const Arena& arena,
                     const Thresholds& th, long grad_clip_events);

std::string summary_json(const RunSummary& summary);

}  // namespace ctcs
