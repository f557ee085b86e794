#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ctcs/drive_reward.hpp"
#include "ctcs/environment.hpp"
#include "ctcs/learner.hpp"
#include "ctcs/types.hpp"

namespace ctcs {

/// A parse or validation problem; names the offending key and line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_, long line_, const std::string& message)
      : std::runtime_error((line_ > 0 ? "line " + std::to_string(line_) + ": " : std::string()) +
                           (key_.empty() ? message : "key '" + key_ + "': " + message)),
        key(std::move(key_)),
        line(line_) {}
  std::string key;
  long line = 0;
};

/// Every run parameter as a flat scalar, serialized as `key = value` lines.
struct RunConfig {
  // arena geometry
  Scalar arena_side = 1.0;
  Scalar vision_range = 4.0;
  Scalar resource1_x = 0.25;
  Scalar resource1_y = 0.75;
  Scalar resource2_x = 0.75;
  Scalar resource2_y = 0.25;
  Scalar resource_radius = 0.3;
  // body dynamics
  Scalar c1 = -0.05;
  Scalar c2 = -0.05;
  Scalar c3 = -0.008;
  Scalar c4 = 0.0005;
  Scalar dt = 0.01;
  Scalar setpoint_r1 = 1.0;
  Scalar setpoint_r2 = 2.0;
  Scalar setpoint_fm = 0.0;
  Scalar setpoint_fs = 0.0;
  // action constraints
  Scalar walk_fatigue_max = 6.0;
  Scalar sleep_eligible_min = 1.0;
  Scalar sleep_forced_min = 10.0;
  Scalar consume_level_max = 8.0;
  long sleep_min_steps = 1000;
  // drive
  Scalar epsilon_reg = 1e-6;
  bool drive_mask_r1 = true;
  bool drive_mask_r2 = true;
  bool drive_mask_fm = false;
  bool drive_mask_fs = false;
  // learner
  Scalar epsilon_explore = 0.3;
  Scalar gamma = 0.99;
  Scalar tau = 0.001;
  long iterations = 14000;
  std::string target_mode = "semi_gradient";
  Scalar grad_clip_norm = 10.0;
  // networks
  long hidden_units = 128;
  Scalar dropout_rate = 0.15;
  Scalar learning_rate = 0.001;
  // run
  std::uint64_t seed = 1;
  std::string out_dir = "runs";
  Scalar start_x = 0.5;
  Scalar start_y = 0.5;
  Scalar initial_level_r1 = 0.1;
  Scalar initial_level_r2 = 0.1;
  Scalar initial_level_fm = 0.1;
  Scalar initial_level_fs = 0.1;
  long svg_stride = 1;
};

RunConfig default_run_config();

/// Rejects unknown and duplicate keys, naming the key and line.
RunConfig parse_config_string(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Canonical serialization; parses back to an equal configuration. With
/// comments enabled each key is preceded by a one-line description.
std::string dump_config(const RunConfig& cfg, bool with_comments = true);

void validate(const RunConfig& cfg);

/// FNV-1a over the canonical comment-free dump, as a hex string.
std::string config_hash_hex(const RunConfig& cfg);

Arena make_arena(const RunConfig& cfg);
BodyParams make_body(const RunConfig& cfg);
Thresholds make_thresholds(const RunConfig& cfg);
DriveConfig make_drive_config(const RunConfig& cfg);
LearnerConfig make_learner_config(const RunConfig& cfg);
EnvModel make_env(const RunConfig& cfg);
Vec4 initial_levels(const RunConfig& cfg);
WorldState make_start_state(const RunConfig& cfg);

}  // namespace ctcs
