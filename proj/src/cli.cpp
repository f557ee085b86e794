#include "ctcs/cli.hpp"

#include <algorithm>
#include <ctime>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ctcs/experiment.hpp"
#include "ctcs/verify.hpp"

namespace ctcs {

namespace {

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::filesystem::path resolve_run_dir(const std::filesystem::path& base, std::uint64_t seed,
                                      bool force) {
  if (force) return base / ("seed" + std::to_string(seed));
  const std::string stamp = timestamp_utc();
  std::filesystem::path dir = base / (stamp + "-seed" + std::to_string(seed));
  int suffix = 1;
  while (std::filesystem::exists(dir)) {
    dir = base / (stamp + "-seed" + std::to_string(seed) + "-" + std::to_string(suffix++));
  }
  return dir;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    const std::string item =
        pos == std::string::npos ? text.substr(start) : text.substr(start, pos - start);
    if (item.empty()) throw ConfigError("seeds", 0, "empty entry in seed list");
    std::uint64_t seed = 0;
    try {
      std::size_t used = 0;
      seed = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("seeds", 0, "bad seed '" + item + "'");
    }
    if (std::find(seeds.begin(), seeds.end(), seed) == seeds.end()) seeds.push_back(seed);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return seeds;
}

int cmd_run(const std::string& config_path, bool seed_set, std::uint64_t seed_override,
            bool iterations_set, long iterations_override, const std::string& out_override,
            const std::string& seeds_list, bool force) {
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (seed_set) cfg.seed = seed_override;
    if (iterations_set) cfg.iterations = iterations_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    validate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  }

  std::vector<std::uint64_t> seeds;
  try {
    seeds = seeds_list.empty() ? std::vector<std::uint64_t>{cfg.seed} : parse_seed_list(seeds_list);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  // Output directories are resolved up front so parallel runs cannot race.
  std::vector<std::filesystem::path> dirs;
  dirs.reserve(seeds.size());
  for (const auto s : seeds) dirs.push_back(resolve_run_dir(cfg.out_dir, s, force));

  std::vector<std::exception_ptr> errors(seeds.size());
  std::vector<std::string> summaries(seeds.size());
  auto one_run = [&](std::size_t i) {
    try {
      const ExperimentResult result = run_experiment(cfg, seeds[i]);
      write_outputs(result, cfg, dirs[i]);
      summaries[i] = summary_json(result.summary);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (seeds.size() == 1) {
    one_run(0);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) workers.emplace_back(one_run, i);
    for (auto& w : workers) w.join();
  }

  int status = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const ConfigError& e) {
        std::cerr << "config error (seed " << seeds[i] << "): " << e.what() << "\n";
        status = std::max(status, 2);
      } catch (const IoError& e) {
        std::cerr << "io error (seed " << seeds[i] << "): " << e.what() << "\n";
        status = std::max(status, 3);
      } catch (const RunAborted& e) {
        std::cerr << "run aborted (seed " << seeds[i] << "): " << e.what() << "\n";
        status = std::max(status, 3);
      } catch (const std::exception& e) {
        std::cerr << "error (seed " << seeds[i] << "): " << e.what() << "\n";
        status = std::max(status, 1);
      }
      continue;
    }
    std::cout << "# seed " << seeds[i] << " -> " << dirs[i].string() << "\n";
    std::cout << summaries[i];
  }
  return status;
}

int cmd_verify(const std::string& suite) {
  std::vector<verify::SuiteReport> reports;
  auto append = [&](std::vector<verify::SuiteReport> more) {
    for (auto& r : more) reports.push_back(std::move(r));
  };
  if (suite == "lemma1" || suite == "all") append(verify::lemma1_suite());
  if (suite == "signs" || suite == "all") append(verify::signs_suite());
  if (suite == "gradients" || suite == "all") append(verify::gradients_suite());
  if (suite == "constraints" || suite == "all") append(verify::constraints_suite());

  std::cout << verify::report_json(reports);
  for (const auto& r : reports) {
    if (r.violations > 0) {
      std::cerr << "violation in " << r.property;
      if (!r.first_counterexample.empty()) std::cerr << ": " << r.first_counterexample;
      std::cerr << "\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"continuous-time homeostatic reinforcement-learning agent"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a learning experiment and write telemetry");
  std::string config_path;
  std::uint64_t seed_override = 0;
  long iterations_override = 0;
  std::string out_override;
  std::string seeds_list;
  bool force = false;
  run_cmd->add_option("--config", config_path, "configuration file (flat key = value lines)");
  auto* seed_opt = run_cmd->add_option("--seed", seed_override, "master seed");
  auto* iter_opt = run_cmd->add_option("--iterations", iterations_override, "number of steps");
  run_cmd->add_option("--out", out_override, "output directory");
  run_cmd->add_option("--seeds", seeds_list, "comma-separated seed list for parallel runs");
  run_cmd->add_flag("--force", force, "write into a stable per-seed directory, overwriting");

  auto* verify_cmd = app.add_subcommand("verify", "run the analytical verification suites");
  std::string suite = "all";
  verify_cmd->add_option("suite", suite, "lemma1, signs, gradients, constraints, or all")
      ->check(CLI::IsMember({"lemma1", "signs", "gradients", "constraints", "all"}));

  auto* config_cmd = app.add_subcommand("config", "inspect configuration defaults");
  bool dump = false;
  config_cmd->add_flag("--dump", dump, "print every default as a parseable config file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_run(config_path, seed_opt->count() > 0, seed_override, iter_opt->count() > 0,
                     iterations_override, out_override, seeds_list, force);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(suite);
    }
    if (config_cmd->parsed()) {
      std::cout << dump_config(default_run_config());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ctcs
