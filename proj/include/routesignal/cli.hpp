#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "routesignal/config_io.hpp"
#include "routesignal/dynamics.hpp"
#include "routesignal/equilibrium.hpp"
#include "routesignal/report_io.hpp"

namespace routesignal {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "ROUTESIGNAL_OUT_DIR";

/// Exit codes for check-obedience.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitNotObedient = 2 };

struct SimulateFlags {
  std::string config;
  std::optional<std::size_t> rounds;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> scenario;
  std::optional<std::string> estimator;
  std::optional<std::string> out;
  bool emit_envelope = false;
};

struct ObedienceFlags {
  std::string config;
  double tol = 1e-8;
  bool json = false;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string csv;
  double wall_seconds = 0.0;
  std::size_t clamp_events = 0;
};

/// Run one simulation per seed concurrently, write CSVs, resolved config and manifest.
inline int cmd_simulate(const SimulateFlags& flags, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  try {
    GameConfig cfg = load_config(flags.config);
    if (flags.rounds) cfg.rounds = *flags.rounds;
    if (flags.scenario) cfg.scenario = detail::parse_scenario(nlohmann::json(*flags.scenario));
    if (flags.estimator)
      cfg.estimator = detail::parse_estimator(nlohmann::json(*flags.estimator), cfg.latency.links);
    if (!flags.seeds.empty()) cfg.seed = flags.seeds.front();
    cfg.validate();
    if (flags.emit_envelope && cfg.estimator.kind != EstimatorSpec::Kind::smoothing)
      throw ConfigError("--emit-envelope applies to the smoothing estimator only");

    if (cfg.m_max_override && cfg.m_max < m_max_default(cfg.latency))
      err << "warning: m_max " << cfg.m_max << " is below the regret bound "
          << m_max_default(cfg.latency) << "; theta may saturate\n";
    if (cfg.estimator.stability_unanalyzed())
      err << "warning: nonzero observer gain, stability unanalyzed\n";

    fs::path dir = "routesignal-out";
    if (flags.out) {
      dir = *flags.out;
    } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
      dir = env;
    }
    fs::create_directories(dir);

    const std::vector<std::uint64_t> seeds =
        flags.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : flags.seeds;

    {
      std::ofstream f(dir / "resolved_config.json");
      f << config_to_json(cfg).dump(2) << '\n';
    }

    std::vector<std::future<RunRecord>> jobs;
    for (std::size_t idx = 0; idx < seeds.size(); ++idx) {
      const std::uint64_t seed = seeds[idx];
      const std::string name = "run" + std::to_string(idx) + "_seed" + std::to_string(seed) + ".csv";
      jobs.push_back(std::async(std::launch::async, [&cfg, seed, name, dir, &flags] {
        const auto t0 = std::chrono::steady_clock::now();
        SimulationResult res = run_simulation(cfg, seed);
        std::vector<Envelope> env;
        if (flags.emit_envelope) env = trajectory_envelope(res.trajectory, cfg.beta);
        std::ofstream f(dir / name);
        write_trajectory_csv(f, cfg.latency, res.trajectory, env);
        if (!f) throw std::runtime_error("failed writing " + (dir / name).string());
        const auto t1 = std::chrono::steady_clock::now();
        return RunRecord{seed, name, std::chrono::duration<double>(t1 - t0).count(), res.clamp_events};
      }));
    }

    nlohmann::json runs = nlohmann::json::array();
    std::string failure;
    for (auto& job : jobs) {
      try {
        RunRecord r = job.get();
        if (r.clamp_events > 0)
          err << "warning: seed " << r.seed << " clamped the regret " << r.clamp_events << " times\n";
        runs.push_back({{"seed", r.seed},
                        {"csv", r.csv},
                        {"wall_seconds", r.wall_seconds},
                        {"clamp_events", r.clamp_events}});
      } catch (const std::exception& e) {
        if (failure.empty()) failure = e.what();
      }
    }
    if (!failure.empty()) throw std::runtime_error(failure);

    nlohmann::json manifest = {{"version", kVersion},
                               {"config_digest", config_digest(cfg)},
                               {"resolved_config", "resolved_config.json"},
                               {"rounds", cfg.rounds},
                               {"seeds", seeds},
                               {"runs", runs}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
    out << "wrote " << seeds.size() << " trajectories to " << dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline int cmd_check_obedience(const ObedienceFlags& flags, std::ostream& out, std::ostream& err) {
  try {
    const GameConfig cfg = load_config(flags.config);
    const ObedienceReport rep = check_obedience(cfg, flags.tol);
    if (flags.json) {
      out << to_json(rep).dump(2) << '\n';
    } else {
      out << (rep.obedient ? "obedient" : "not obedient") << " (witness " << rep.witness << ")\n"
          << "  worst obedience slack: " << detail::g17(rep.worst_obedience_slack) << '\n'
          << "  worst nash slack:      " << detail::g17(rep.worst_nash_slack) << '\n'
          << "  y0:";
      for (double v : rep.y0.y) out << ' ' << detail::g17(v);
      out << '\n';
    }
    return rep.obedient ? kExitOk : kExitNotObedient;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

/// Entry point shared by the binary and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Repeated routing game with partial signaling"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateFlags sim;
  std::size_t rounds = 0;
  std::string scenario, estimator, out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run the repeated game and export trajectories");
  simulate->add_option("--config", sim.config, "Config file")->required()->check(CLI::ExistingFile);
  auto* rounds_opt =
      simulate->add_option("--rounds", rounds, "Number of rounds")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seeds, "Seed; repeat for a sweep")->take_all();
  auto* scenario_opt = simulate->add_option(
      "--scenario", scenario, "baseline | discounted=LAMBDA | dynamic-nu");
  auto* estimator_opt =
      simulate->add_option("--estimator", estimator, "smoothing | luenberger=L");
  auto* out_opt = simulate->add_option(
      "--out", out_dir, std::string("Output directory (default $") + kOutDirEnv + " or ./routesignal-out)");
  simulate->add_flag("--emit-envelope", sim.emit_envelope, "Add e_lower/e_upper columns");

  ObedienceFlags obey;
  auto* check = app.add_subcommand("check-obedience", "Test a signal against the obedience conditions");
  check->add_option("--config", obey.config, "Config file")->required()->check(CLI::ExistingFile);
  check->add_option("--tol", obey.tol, "Slack tolerance")->check(CLI::NonNegativeNumber);
  check->add_flag("--json", obey.json, "Print the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitError;
  }

  if (simulate->parsed()) {
    if (*rounds_opt) sim.rounds = rounds;
    if (*scenario_opt) sim.scenario = scenario;
    if (*estimator_opt) sim.estimator = estimator;
    if (*out_opt) sim.out = out_dir;
    return cmd_simulate(sim, out, err);
  }
  return cmd_check_obedience(obey, out, err);
}

}  // namespace routesignal
