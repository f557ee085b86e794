#include "ctcs/config.hpp"

#include <cctype>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

namespace ctcs {

namespace {

using Member = std::variant<Scalar RunConfig::*, long RunConfig::*, bool RunConfig::*,
                            std::string RunConfig::*, std::uint64_t RunConfig::*>;

struct FieldDef {
  const char* key;
  Member member;
  const char* comment;
};

const std::vector<FieldDef>& field_defs() {
  static const std::vector<FieldDef> defs = {
      {"arena_side", &RunConfig::arena_side, "side length of the square arena"},
      {"vision_range", &RunConfig::vision_range,
       "maximum distance at which a resource can be targeted"},
      {"resource1_x", &RunConfig::resource1_x, "resource 1 center, x coordinate"},
      {"resource1_y", &RunConfig::resource1_y, "resource 1 center, y coordinate"},
      {"resource2_x", &RunConfig::resource2_x, "resource 2 center, x coordinate"},
      {"resource2_y", &RunConfig::resource2_y, "resource 2 center, y coordinate"},
      {"resource_radius", &RunConfig::resource_radius,
       "radius of the circles inside which a resource can be consumed"},
      {"c1", &RunConfig::c1, "self-regulation rate of the resource 1 level"},
      {"c2", &RunConfig::c2, "self-regulation rate of the resource 2 level"},
      {"c3", &RunConfig::c3, "self-regulation rate of muscular fatigue"},
      {"c4", &RunConfig::c4, "self-regulation rate of sleep fatigue"},
      {"dt", &RunConfig::dt, "elementary time step"},
      {"setpoint_r1", &RunConfig::setpoint_r1, "homeostatic set point for resource 1"},
      {"setpoint_r2", &RunConfig::setpoint_r2, "homeostatic set point for resource 2"},
      {"setpoint_fm", &RunConfig::setpoint_fm, "homeostatic set point for muscular fatigue"},
      {"setpoint_fs", &RunConfig::setpoint_fs, "homeostatic set point for sleep fatigue"},
      {"walk_fatigue_max", &RunConfig::walk_fatigue_max,
       "walking is admissible only at or below this muscular fatigue"},
      {"sleep_eligible_min", &RunConfig::sleep_eligible_min,
       "sleeping can be chosen once sleep fatigue reaches this level"},
      {"sleep_forced_min", &RunConfig::sleep_forced_min,
       "at or above this sleep fatigue, sleeping is the only admissible action"},
      {"consume_level_max", &RunConfig::consume_level_max,
       "consuming is admissible only at or below this resource level"},
      {"sleep_min_steps", &RunConfig::sleep_min_steps,
       "minimum number of elementary steps a sleep bout lasts"},
      {"epsilon_reg", &RunConfig::epsilon_reg,
       "regularizer inside the drive's square root"},
      {"drive_mask_r1", &RunConfig::drive_mask_r1, "resource 1 deviation enters the drive"},
      {"drive_mask_r2", &RunConfig::drive_mask_r2, "resource 2 deviation enters the drive"},
      {"drive_mask_fm", &RunConfig::drive_mask_fm, "muscular fatigue enters the drive"},
      {"drive_mask_fs", &RunConfig::drive_mask_fs, "sleep fatigue enters the drive"},
      {"epsilon_explore", &RunConfig::epsilon_explore,
       "probability of taking a uniformly random admissible action"},
      {"gamma", &RunConfig::gamma, "discount factor"},
      {"tau", &RunConfig::tau, "target-network tracking rate"},
      {"iterations", &RunConfig::iterations, "number of simulation steps"},
      {"target_mode", &RunConfig::target_mode,
       "gradient term source for the deviation loss: semi_gradient or none"},
      {"grad_clip_norm", &RunConfig::grad_clip_norm,
       "global gradient-norm clip for both updates (0 disables)"},
      {"hidden_units", &RunConfig::hidden_units, "width of each of the two hidden layers"},
      {"dropout_rate", &RunConfig::dropout_rate, "dropout rate on hidden activations"},
      {"learning_rate", &RunConfig::learning_rate, "Adam learning rate"},
      {"seed", &RunConfig::seed, "master seed for all random streams"},
      {"out_dir", &RunConfig::out_dir, "directory receiving run outputs"},
      {"start_x", &RunConfig::start_x, "agent start position, x coordinate"},
      {"start_y", &RunConfig::start_y, "agent start position, y coordinate"},
      {"initial_level_r1", &RunConfig::initial_level_r1, "starting level of resource 1"},
      {"initial_level_r2", &RunConfig::initial_level_r2, "starting level of resource 2"},
      {"initial_level_fm", &RunConfig::initial_level_fm, "starting muscular fatigue"},
      {"initial_level_fs", &RunConfig::initial_level_fs, "starting sleep fatigue"},
      {"svg_stride", &RunConfig::svg_stride, "plot every n-th record in the SVG output"},
  };
  return defs;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string format_real(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  if (std::strtod(buf, nullptr) == v) return buf;
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_value(const RunConfig& cfg, const Member& member) {
  return std::visit(
      [&](auto ptr) -> std::string {
        const auto& value = cfg.*ptr;
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, Scalar>) {
          return format_real(value);
        } else if constexpr (std::is_same_v<T, bool>) {
          return value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return value;
        } else {
          return std::to_string(value);
        }
      },
      member);
}

void assign_value(RunConfig& cfg, const FieldDef& def, const std::string& text, long line) {
  std::visit(
      [&](auto ptr) {
        auto& slot = cfg.*ptr;
        using T = std::decay_t<decltype(slot)>;
        if constexpr (std::is_same_v<T, Scalar>) {
          char* end = nullptr;
          const double v = std::strtod(text.c_str(), &end);
          if (end == text.c_str() || *end != '\0') {
            throw ConfigError(def.key, line, "expected a real number, got '" + text + "'");
          }
          slot = v;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true") {
            slot = true;
          } else if (text == "false") {
            slot = false;
          } else {
            throw ConfigError(def.key, line, "expected true or false, got '" + text + "'");
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (text.empty()) throw ConfigError(def.key, line, "expected a value");
          slot = text;
        } else if constexpr (std::is_same_v<T, long>) {
          try {
            std::size_t used = 0;
            slot = std::stol(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
          } catch (const std::exception&) {
            throw ConfigError(def.key, line, "expected an integer, got '" + text + "'");
          }
        } else {  // std::uint64_t
          try {
            std::size_t used = 0;
            slot = std::stoull(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
          } catch (const std::exception&) {
            throw ConfigError(def.key, line, "expected an unsigned integer, got '" + text + "'");
          }
        }
      },
      def.member);
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_config_string(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", line_no, "expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "missing key before '='");
    const FieldDef* def = nullptr;
    for (const auto& d : field_defs()) {
      if (key == d.key) {
        def = &d;
        break;
      }
    }
    if (def == nullptr) throw ConfigError(key, line_no, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, line_no, "duplicate key");
    assign_value(cfg, *def, value, line_no);
  }
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_string(ss.str());
}

std::string dump_config(const RunConfig& cfg, bool with_comments) {
  std::string out;
  if (with_comments) out += "# ctcs-hrrl run configuration\n";
  for (const auto& def : field_defs()) {
    if (with_comments) {
      out += "# ";
      out += def.comment;
      out += "\n";
    }
    out += def.key;
    out += " = ";
    out += format_value(cfg, def.member);
    out += "\n";
  }
  return out;
}

void validate(const RunConfig& cfg) {
  auto require = [](bool ok, const char* key, const std::string& msg) {
    if (!ok) throw ConfigError(key, 0, msg);
  };
  require(cfg.arena_side > 0, "arena_side", "must be positive");
  require(cfg.vision_range > 0, "vision_range", "must be positive");
  require(cfg.resource_radius > 0, "resource_radius", "must be positive");
  auto inside = [&](Scalar x, Scalar y) {
    return x >= 0 && x <= cfg.arena_side && y >= 0 && y <= cfg.arena_side;
  };
  require(inside(cfg.resource1_x, cfg.resource1_y), "resource1_x", "center outside the arena");
  require(inside(cfg.resource2_x, cfg.resource2_y), "resource2_x", "center outside the arena");
  require(cfg.resource1_x != cfg.resource2_x || cfg.resource1_y != cfg.resource2_y, "resource2_x",
          "resource centers must be distinct");
  require(cfg.dt > 0, "dt", "must be positive");
  require(cfg.walk_fatigue_max > 0, "walk_fatigue_max", "must be positive");
  require(cfg.sleep_eligible_min > 0, "sleep_eligible_min", "must be positive");
  require(cfg.sleep_forced_min > cfg.sleep_eligible_min, "sleep_forced_min",
          "must exceed sleep_eligible_min");
  require(cfg.consume_level_max > 0, "consume_level_max", "must be positive");
  require(cfg.sleep_min_steps > 0, "sleep_min_steps", "must be positive");
  require(cfg.epsilon_reg > 0, "epsilon_reg", "must be positive");
  require(cfg.epsilon_explore >= 0 && cfg.epsilon_explore <= 1, "epsilon_explore",
          "must lie in [0,1]");
  require(cfg.gamma > 0 && cfg.gamma < 1, "gamma", "must lie in (0,1)");
  require(cfg.tau > 0 && cfg.tau <= 1, "tau", "must lie in (0,1]");
  require(cfg.iterations >= 0, "iterations", "must be >= 0");
  require(cfg.target_mode == "semi_gradient" || cfg.target_mode == "none", "target_mode",
          "must be semi_gradient or none");
  require(cfg.grad_clip_norm >= 0, "grad_clip_norm", "must be >= 0");
  require(cfg.hidden_units > 0, "hidden_units", "must be positive");
  require(cfg.dropout_rate >= 0 && cfg.dropout_rate < 1, "dropout_rate", "must lie in [0,1)");
  require(cfg.learning_rate > 0, "learning_rate", "must be positive");
  require(inside(cfg.start_x, cfg.start_y), "start_x", "start position outside the arena");
  require(cfg.initial_level_r1 >= 0, "initial_level_r1", "must be >= 0");
  require(cfg.initial_level_r2 >= 0, "initial_level_r2", "must be >= 0");
  require(cfg.initial_level_fm >= 0, "initial_level_fm", "must be >= 0");
  require(cfg.initial_level_fs >= 0, "initial_level_fs", "must be >= 0");
  require(cfg.svg_stride >= 1, "svg_stride", "must be >= 1");
}

std::string config_hash_hex(const RunConfig& cfg) {
  // Output destination and plot stride do not change the experiment, so two
  // runs differing only there share a hash.
  RunConfig canonical_cfg = cfg;
  canonical_cfg.out_dir = "";
  canonical_cfg.svg_stride = 1;
  const std::string canonical = dump_config(canonical_cfg, false);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Arena make_arena(const RunConfig& cfg) {
  Arena arena;
  arena.side = cfg.arena_side;
  arena.vision_range = cfg.vision_range;
  arena.resources[0].center << cfg.resource1_x, cfg.resource1_y;
  arena.resources[0].radius = cfg.resource_radius;
  arena.resources[0].index = 1;
  arena.resources[1].center << cfg.resource2_x, cfg.resource2_y;
  arena.resources[1].radius = cfg.resource_radius;
  arena.resources[1].index = 2;
  return arena;
}

BodyParams make_body(const RunConfig& cfg) {
  BodyParams body;
  body.c << cfg.c1, cfg.c2, cfg.c3, cfg.c4;
  body.setpoint.values << cfg.setpoint_r1, cfg.setpoint_r2, cfg.setpoint_fm, cfg.setpoint_fs;
  body.dt = cfg.dt;
  return body;
}

Thresholds make_thresholds(const RunConfig& cfg) {
  Thresholds th;
  th.walk_fatigue_max = cfg.walk_fatigue_max;
  th.sleep_eligible_min = cfg.sleep_eligible_min;
  th.sleep_forced_min = cfg.sleep_forced_min;
  th.consume_level_max = cfg.consume_level_max;
  th.sleep_min_steps = cfg.sleep_min_steps;
  return th;
}

DriveConfig make_drive_config(const RunConfig& cfg) {
  DriveConfig dc;
  dc.epsilon_reg = cfg.epsilon_reg;
  dc.mask = {cfg.drive_mask_r1, cfg.drive_mask_r2, cfg.drive_mask_fm, cfg.drive_mask_fs};
  return dc;
}

LearnerConfig make_learner_config(const RunConfig& cfg) {
  LearnerConfig lc;
  lc.epsilon_explore = cfg.epsilon_explore;
  lc.gamma = cfg.gamma;
  lc.tau = cfg.tau;
  lc.dt = cfg.dt;
  lc.iterations = cfg.iterations;
  lc.target_mode = cfg.target_mode == "none" ? TargetMode::None : TargetMode::SemiGradient;
  lc.grad_clip_norm = cfg.grad_clip_norm;
  lc.hidden_units = static_cast<int>(cfg.hidden_units);
  lc.dropout_rate = cfg.dropout_rate;
  lc.learning_rate = cfg.learning_rate;
  return lc;
}

EnvModel make_env(const RunConfig& cfg) {
  return EnvModel{make_arena(cfg), make_body(cfg), make_thresholds(cfg)};
}

Vec4 initial_levels(const RunConfig& cfg) {
  return (Vec4() << cfg.initial_level_r1, cfg.initial_level_r2, cfg.initial_level_fm,
          cfg.initial_level_fs)
      .finished();
}

WorldState make_start_state(const RunConfig& cfg) {
  return make_initial_state(initial_levels(cfg), (Vec2() << cfg.start_x, cfg.start_y).finished(),
                            make_body(cfg), make_arena(cfg));
}

}  // namespace ctcs
