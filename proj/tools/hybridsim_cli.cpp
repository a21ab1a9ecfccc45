#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "hybridsim/event_log.hpp"
#include "hybridsim/metrics.hpp"
#include "hybridsim/multiscale.hpp"
#include "hybridsim/planner.hpp"
#include "hybridsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace hybridsim;

namespace {

constexpr int kValidationExit = 2;

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    write_text(out_path, content);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("window must be <start>:<end>");
  try {
    const double a = std::stod(text.substr(0, colon));
    const double b = std::stod(text.substr(colon + 1));
    if (!(b > a)) throw ValidationError("window end must exceed its start");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ValidationError("window must be <start>:<end>");
  }
}

void write_run(const fs::path& dir, const Scenario& scenario, const SimulationResult& result) {
  fs::create_directories(dir);
  result.log.write((dir / "events.log").string());
  if (!scenario.segments.empty()) {
    write_text(dir / "stats.csv", write_stats(travel_time_stats(result.log, scenario.segments)));
  }
  write_text(dir / "summary.csv",
             fmt::format("agents,arrived,stranded,end_time_s\n{},{},{},{:.4f}\n", result.outcomes.size(),
                         result.arrived, result.stranded, result.end_time));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale pedestrian and queue-link simulation"};
  app.require_subcommand(1);

  std::string manifest;
  std::string out_dir;
  bool trace_moves = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run one simulation with free-flow shortest-path plans");
  simulate_cmd->add_option("manifest", manifest, "Scenario manifest")->required();
  simulate_cmd->add_option("--out", out_dir, "Output directory")->required();
  simulate_cmd->add_flag("--trace-moves", trace_moves, "Log every cell move");

  int iterations = 0;
  std::string mode_text = "nash";
  double replan_fraction = -1.0;
  std::string relax_out;
  auto* relax_cmd = app.add_subcommand("relax", "Iterate simulate/score/replan");
  relax_cmd->add_option("manifest", manifest, "Scenario manifest")->required();
  relax_cmd->add_option("--iterations", iterations, "Iteration count")->required();
  relax_cmd->add_option("--mode", mode_text, "nash or so")->check(CLI::IsMember({"nash", "so"}));
  relax_cmd->add_option("--replan-fraction", replan_fraction, "Fraction of agents replanned per iteration");
  relax_cmd->add_option("--out", relax_out, "Directory for history.csv and the last event log");

  std::string log_path;
  std::string segments_path;
  std::string stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Travel-time statistics from an event log");
  stats_cmd->add_option("log", log_path, "Event log")->required();
  stats_cmd->add_option("--segments", segments_path, "Segment definitions (default: embedded in the log)");
  stats_cmd->add_option("--out", stats_out, "Output CSV (default: stdout)");

  BottleneckConfig bottleneck;
  std::string window_text = "5:35";
  std::string bottleneck_out;
  auto* bottleneck_cmd = app.add_subcommand("bottleneck", "Bottleneck flow sweep");
  bottleneck_cmd->add_option("--omega-min", bottleneck.omega_min, "Smallest opening (m)");
  bottleneck_cmd->add_option("--omega-max", bottleneck.omega_max, "Largest opening (m)");
  bottleneck_cmd->add_option("--omega-step", bottleneck.omega_step, "Opening increment (m)");
  bottleneck_cmd->add_option("--agents", bottleneck.agents, "Agents generated at once");
  bottleneck_cmd->add_option("--window", window_text, "Steady-state window <start>:<end> (s)");
  bottleneck_cmd->add_option("--seed", bottleneck.seed, "Random seed");
  bottleneck_cmd->add_option("--out", bottleneck_out, "Output CSV (default: stdout)");

  std::string cycle_out;
  auto* cycle_cmd = app.add_subcommand("cycle-report", "Landing-cycle durations from an event log");
  cycle_cmd->add_option("log", log_path, "Event log")->required();
  cycle_cmd->add_option("--out", cycle_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  try {
    if (*simulate_cmd) {
      const Scenario scenario = load_scenario(manifest);
      SimulationOptions options;
      options.trace_moves = trace_moves;
      const auto result = simulate(scenario, options);
      write_run(out_dir, scenario, result);
      std::cout << fmt::format("{} agents, {} arrived, {} stranded, end {:.1f} s\n", result.outcomes.size(),
                               result.arrived, result.stranded, result.end_time);
    } else if (*relax_cmd) {
      const Scenario scenario = load_scenario(manifest);
      RelaxationConfig config = relaxation_config(scenario);
      config.iterations = iterations;
      config.mode = parse_relax_mode(mode_text);
      if (replan_fraction >= 0.0) config.replan_fraction = replan_fraction;
      const auto result = relax(scenario, config);
      const std::string history = write_history(result.history);
      if (relax_out.empty()) {
        std::cout << history;
      } else {
        write_run(relax_out, scenario, result.last);
        write_text(fs::path(relax_out) / "history.csv", history);
      }
    } else if (*stats_cmd) {
      const EventLog log = EventLog::read(log_path);
      const auto segments = segments_path.empty() ? segments_from_log(log) : load_segments(read_text(segments_path));
      if (segments.empty()) throw ValidationError("no segment definitions");
      emit(stats_out, write_stats(travel_time_stats(log, segments)));
    } else if (*bottleneck_cmd) {
      const auto [start, end] = parse_window(window_text);
      bottleneck.window_start = start;
      bottleneck.window_end = end;
      emit(bottleneck_out, write_bottleneck(bottleneck_sweep(bottleneck)));
    } else if (*cycle_cmd) {
      emit(cycle_out, write_cycle_report(landing_cycle_report(EventLog::read(log_path))));
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const LookupError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
