#include "ctcs/telemetry.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ctcs {

namespace {

constexpr const char* kCsvHeader =
    "step,clock,level1,level2,fatigue_m,fatigue_s,drive,reward,loss_f,loss_j,action,explored,"
    "pos_x,pos_y";

std::string num(Scalar v, const char* format = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

bool is_walk(ActionId id) {
  return id == ActionId::WalkLeft || id == ActionId::WalkRight || id == ActionId::WalkDown ||
         id == ActionId::WalkUp;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// --- minimal deterministic SVG plotting -----------------------------------

struct Series {
  std::string label;
  std::string color;
  std::vector<Scalar> x, y;
  bool dashed = false;
};

struct HLine {
  Scalar value = 0;
  std::string color;
};

std::string svg_polyline(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys,
                         const std::string& color, bool dashed, Scalar x0, Scalar x1, Scalar y0,
                         Scalar y1, Scalar px0, Scalar px1, Scalar py0, Scalar py1) {
  std::string pts;
  pts.reserve(xs.size() * 16);
  const Scalar xspan = x1 > x0 ? x1 - x0 : 1.0;
  const Scalar yspan = y1 > y0 ? y1 - y0 : 1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Scalar px = px0 + (xs[i] - x0) / xspan * (px1 - px0);
    const Scalar py = py1 - (ys[i] - y0) / yspan * (py1 - py0);
    pts += num(px, "%.2f");
    pts += ",";
    pts += num(py, "%.2f");
    pts += " ";
  }
  std::string style = "fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.2\"";
  if (dashed) style += " stroke-dasharray=\"6,4\"";
  if (xs.size() == 1) {
    return "<circle cx=\"" + num(px0, "%.2f") + "\" cy=\"" +
           num(py1 - (ys[0] - y0) / yspan * (py1 - py0), "%.2f") + "\" r=\"2.5\" fill=\"" + color +
           "\"/>\n";
  }
  return "<polyline " + style + " points=\"" + pts + "\"/>\n";
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series, const std::vector<HLine>& hlines) {
  const Scalar width = 860, height = 520;
  const Scalar px0 = 70, px1 = width - 20, py0 = 46, py1 = height - 52;

  Scalar x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  for (const auto& h : hlines) {
    y_min = std::min(y_min, h.value);
    y_max = std::max(y_max, h.value);
  }
  const Scalar pad = (y_max - y_min) > 0 ? 0.05 * (y_max - y_min) : 0.5;
  y_min -= pad;
  y_max += pad;
  if (x_max <= x_min) x_max = x_min + 1;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width, "%.0f") +
         "\" height=\"" + num(height, "%.0f") + "\" viewBox=\"0 0 " + num(width, "%.0f") + " " +
         num(height, "%.0f") + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width, "%.0f") + "\" height=\"" +
         num(height, "%.0f") + "\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(width / 2, "%.0f") +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + title +
         "</text>\n";
  // frame
  out += "<rect x=\"" + num(px0, "%.1f") + "\" y=\"" + num(py0, "%.1f") + "\" width=\"" +
         num(px1 - px0, "%.1f") + "\" height=\"" + num(py1 - py0, "%.1f") +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // ticks
  for (int i = 0; i <= 5; ++i) {
    const Scalar fx = x_min + (x_max - x_min) * i / 5.0;
    const Scalar px = px0 + (px1 - px0) * i / 5.0;
    out += "<line x1=\"" + num(px, "%.1f") + "\" y1=\"" + num(py1, "%.1f") + "\" x2=\"" +
           num(px, "%.1f") + "\" y2=\"" + num(py1 + 5, "%.1f") + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(px, "%.1f") + "\" y=\"" + num(py1 + 20, "%.1f") +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           num(fx, "%.4g") + "</text>\n";
    const Scalar fy = y_min + (y_max - y_min) * i / 5.0;
    const Scalar py = py1 - (py1 - py0) * i / 5.0;
    out += "<line x1=\"" + num(px0 - 5, "%.1f") + "\" y1=\"" + num(py, "%.1f") + "\" x2=\"" +
           num(px0, "%.1f") + "\" y2=\"" + num(py, "%.1f") + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(px0 - 9, "%.1f") + "\" y=\"" + num(py + 4, "%.1f") +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(fy, "%.4g") +
           "</text>\n";
  }
  out += "<text x=\"" + num((px0 + px1) / 2, "%.0f") + "\" y=\"" + num(height - 14, "%.0f") +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
         "</text>\n";
  for (const auto& h : hlines) {
    std::vector<Scalar> hx = {x_min, x_max};
    std::vector<Scalar> hy = {h.value, h.value};
    out += svg_polyline(hx, hy, h.color, true, x_min, x_max, y_min, y_max, px0, px1, py0, py1);
  }
  Scalar legend_y = py0 + 16;
  for (const auto& s : series) {
    out += svg_polyline(s.x, s.y, s.color, s.dashed, x_min, x_max, y_min, y_max, px0, px1, py0,
                        py1);
    out += "<text x=\"" + num(px1 - 8, "%.1f") + "\" y=\"" + num(legend_y, "%.1f") +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + s.color +
           "\">" + s.label + "</text>\n";
    legend_y += 16;
  }
  out += "</svg>\n";
  return out;
}

std::string svg_track(const EpisodeLog& log, const Arena& arena, int stride) {
  const Scalar size = 560;
  const Scalar p0 = 40, p1 = size - 20;
  auto to_px = [&](Scalar v) { return p0 + v / arena.side * (p1 - p0); };
  auto to_py = [&](Scalar v) { return p1 - v / arena.side * (p1 - p0); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(size, "%.0f") +
         "\" height=\"" + num(size, "%.0f") + "\" viewBox=\"0 0 " + num(size, "%.0f") + " " +
         num(size, "%.0f") + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(size, "%.0f") + "\" height=\"" + num(size, "%.0f") +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(size / 2, "%.0f") +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">agent "
         "track</text>\n";
  out += "<rect x=\"" + num(p0, "%.1f") + "\" y=\"" + num(to_py(arena.side), "%.1f") +
         "\" width=\"" + num(p1 - p0, "%.1f") + "\" height=\"" + num(p1 - p0, "%.1f") +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  const char* colors[2] = {"#3366cc", "#33aa55"};
  for (int k = 0; k < 2; ++k) {
    const auto& site = arena.resources[static_cast<std::size_t>(k)];
    out += "<circle cx=\"" + num(to_px(site.center[0]), "%.1f") + "\" cy=\"" +
           num(to_py(site.center[1]), "%.1f") + "\" r=\"" +
           num(site.radius / arena.side * (p1 - p0), "%.1f") + "\" fill=\"" + colors[k] +
           "\" fill-opacity=\"0.25\" stroke=\"" + colors[k] + "\"/>\n";
  }
  std::string pts;
  for (std::size_t i = 0; i < log.records.size(); i += static_cast<std::size_t>(stride)) {
    pts += num(to_px(log.records[i].pos_x), "%.2f");
    pts += ",";
    pts += num(to_py(log.records[i].pos_y), "%.2f");
    pts += " ";
  }
  if (log.records.size() == 1) {
    out += "<circle cx=\"" + num(to_px(log.records[0].pos_x), "%.2f") + "\" cy=\"" +
           num(to_py(log.records[0].pos_y), "%.2f") + "\" r=\"3\" fill=\"#777777\"/>\n";
  } else if (!log.records.empty()) {
    out += "<polyline fill=\"none\" stroke=\"#777777\" stroke-width=\"0.8\" points=\"" + pts +
           "\"/>\n";
  }
  if (!log.records.empty()) {
    out += "<circle cx=\"" + num(to_px(log.records.front().pos_x), "%.2f") + "\" cy=\"" +
           num(to_py(log.records.front().pos_y), "%.2f") + "\" r=\"4\" fill=\"black\"/>\n";
    out += "<circle cx=\"" + num(to_px(log.records.back().pos_x), "%.2f") + "\" cy=\"" +
           num(to_py(log.records.back().pos_y), "%.2f") + "\" r=\"4\" fill=\"red\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << content;
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace

void EpisodeLog::record(const StepRecord& rec) {
  const long expected = records.empty() ? 1 : records.back().step + 1;
  if (rec.step != expected) {
    throw ContractViolation("EpisodeLog::record: expected step " + std::to_string(expected) +
                            ", got " + std::to_string(rec.step));
  }
  records.push_back(rec);
}

std::string to_csv(const EpisodeLog& log) {
  std::string out;
  out.reserve(64 + log.records.size() * 140);
  out += kCsvSchemaTag;
  out += "\n";
  out += kCsvHeader;
  out += "\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.step);
    out += ",";
    out += num(r.clock);
    out += ",";
    out += num(r.level1);
    out += ",";
    out += num(r.level2);
    out += ",";
    out += num(r.fatigue_m);
    out += ",";
    out += num(r.fatigue_s);
    out += ",";
    out += num(r.drive);
    out += ",";
    out += num(r.reward);
    out += ",";
    out += num(r.loss_f);
    out += ",";
    out += num(r.loss_j);
    out += ",";
    out += to_string(r.action);
    out += ",";
    out += r.explored ? "1" : "0";
    out += ",";
    out += num(r.pos_x);
    out += ",";
    out += num(r.pos_y);
    out += "\n";
  }
  return out;
}

void emit_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  write_file(path, to_csv(log));
}

EpisodeLog parse_csv_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvSchemaTag) {
    throw IoError("csv: missing schema tag line");
  }
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw IoError("csv: unexpected header");
  }
  EpisodeLog log;
  long line_no = 2;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 14) {
      throw IoError("csv: line " + std::to_string(line_no) + ": expected 14 fields");
    }
    StepRecord r;
    try {
      r.step = std::stol(fields[0]);
      r.clock = std::stod(fields[1]);
      r.level1 = std::stod(fields[2]);
      r.level2 = std::stod(fields[3]);
      r.fatigue_m = std::stod(fields[4]);
      r.fatigue_s = std::stod(fields[5]);
      r.drive = std::stod(fields[6]);
      r.reward = std::stod(fields[7]);
      r.loss_f = std::stod(fields[8]);
      r.loss_j = std::stod(fields[9]);
    } catch (const std::exception&) {
      throw IoError("csv: line " + std::to_string(line_no) + ": bad numeric field");
    }
    const auto action = action_from_string(fields[10]);
    if (!action) throw IoError("csv: line " + std::to_string(line_no) + ": unknown action");
    r.action = *action;
    if (fields[11] != "0" && fields[11] != "1") {
      throw IoError("csv: line " + std::to_string(line_no) + ": explored flag must be 0 or 1");
    }
    r.explored = fields[11] == "1";
    try {
      r.pos_x = std::stod(fields[12]);
      r.pos_y = std::stod(fields[13]);
    } catch (const std::exception&) {
      throw IoError("csv: line " + std::to_string(line_no) + ": bad numeric field");
    }
    log.record(r);
  }
  return log;
}

EpisodeLog parse_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_csv_string(ss.str());
}

void emit_plots(const EpisodeLog& log, const std::filesystem::path& dir, const Arena& arena,
                const SetPoint& setpoint, int stride) {
  if (log.records.empty()) {
    throw ContractViolation("emit_plots: log must be nonempty");
  }
  if (stride < 1) throw ContractViolation("emit_plots: stride must be >= 1");
  std::filesystem::create_directories(dir);

  auto sampled = [&](auto getter) {
    Series s;
    for (std::size_t i = 0; i < log.records.size(); i += static_cast<std::size_t>(stride)) {
      s.x.push_back(static_cast<Scalar>(log.records[i].step));
      s.y.push_back(getter(log.records[i]));
    }
    return s;
  };

  Series lvl1 = sampled([](const StepRecord& r) { return r.level1; });
  lvl1.label = "resource 1";
  lvl1.color = "#3366cc";
  Series lvl2 = sampled([](const StepRecord& r) { return r.level2; });
  lvl2.label = "resource 2";
  lvl2.color = "#33aa55";
  write_file(dir / "levels.svg",
             svg_line_chart("resource levels", "step", {lvl1, lvl2},
                            {{setpoint.values[0], "black"}, {setpoint.values[1], "red"}}));

  Series fm = sampled([](const StepRecord& r) { return r.fatigue_m; });
  fm.label = "muscular fatigue";
  fm.color = "#cc6633";
  Series fs = sampled([](const StepRecord& r) { return r.fatigue_s; });
  fs.label = "sleep fatigue";
  fs.color = "#9944bb";
  write_file(dir / "fatigues.svg", svg_line_chart("fatigues", "step", {fm, fs}, {}));

  Series lj = sampled([](const StepRecord& r) { return r.loss_j; });
  lj.label = "deviation-function loss";
  lj.color = "#cc3333";
  write_file(dir / "loss_j.svg", svg_line_chart("deviation-function loss", "step", {lj}, {}));

  write_file(dir / "track.svg", svg_track(log, arena, stride));
}

ConstraintAudit audit_constraints(const Vec4& initial_levels, const EpisodeLog& log,
                                  const Arena& arena, const Thresholds& th) {
  ConstraintAudit audit;
  Scalar prev_fm = initial_levels[2];
  Scalar prev_fs = initial_levels[3];
  long bout_len = 0;
  for (const auto& r : log.records) {
    if (is_walk(r.action) && prev_fm > th.walk_fatigue_max) ++audit.walk_with_high_fatigue;
    if (r.action != ActionId::Sleep && prev_fs >= th.sleep_forced_min) ++audit.non_sleep_when_forced;
    if (r.action == ActionId::Sleep) {
      ++bout_len;
    } else {
      if (bout_len > 0 && bout_len < th.sleep_min_steps) ++audit.short_sleep_bouts;
      bout_len = 0;
    }
    const bool inside = r.pos_x >= 0.0 && r.pos_x <= arena.side && r.pos_y >= 0.0 &&
                        r.pos_y <= arena.side;
    if (!inside) ++audit.out_of_bounds;
    prev_fm = r.fatigue_m;
    prev_fs = r.fatigue_s;
  }
  // A bout still running when the log ends was cut by the run, not the agent.
  return audit;
}

RunSummary summarize(const Vec4& initial_levels, const EpisodeLog& log, const Arena& arena,
                     const Thresholds& th, long grad_clip_events) {
  RunSummary s;
  s.seed = log.seed;
  s.iterations = static_cast<long>(log.records.size());
  s.config_hash = log.config_hash;
  s.version = log.version;
  s.grad_clip_events = grad_clip_events;
  if (!log.records.empty()) {
    const std::size_t n = log.records.size();
    const std::size_t window = std::max<std::size_t>(1, n / 10);
    Scalar drive_sum = 0;
    for (std::size_t i = n - window; i < n; ++i) drive_sum += log.records[i].drive;
    s.final_mean_drive = drive_sum / static_cast<Scalar>(window);
    long explored = 0;
    for (const auto& r : log.records) explored += r.explored ? 1 : 0;
    s.explored_fraction = static_cast<Scalar>(explored) / static_cast<Scalar>(n);
  }
  s.constraint_violations = audit_constraints(initial_levels, log, arena, th).total();
  return s;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["iterations"] = s.iterations;
  j["final_mean_drive"] = s.final_mean_drive;
  j["explored_fraction"] = s.explored_fraction;
  j["constraint_violations"] = s.constraint_violations;
  j["grad_clip_events"] = s.grad_clip_events;
  j["config_hash"] = s.config_hash;
  j["version"] = s.version;
  return j.dump(2) + "\n";
}

}  // namespace ctcs
