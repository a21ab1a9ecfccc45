#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hybridsim/ca_engine.hpp"
#include "hybridsim/environment.hpp"
#include "hybridsim/global_graph.hpp"
#include "hybridsim/meso_queue.hpp"
#include "hybridsim/plan.hpp"

namespace hybridsim {

struct DemandEntry {
  std::string agent_id;
  std::string origin;
  std::string destination;
  double departure = 0.0;
  std::string group;

  friend bool operator==(const DemandEntry&, const DemandEntry&) = default;
};

enum class DepartureProcess { AllAtOnce, Uniform };

struct DemandGroup {
  std::string tag;
  std::int64_t count = 0;
  std::string origin;
  std::string destination;
  DepartureProcess process = DepartureProcess::AllAtOnce;
  double window_start = 0.0;
  double window_end = 0.0;
};

struct DemandSpec {
  std::vector<DemandGroup> groups;
};

// Agent ids are `<tag>-<k>` with k counting from 1 within a group. Uniform
// departures are seeded draws over [window_start, window_end), sorted.
// Throws ValidationError on negative counts or an empty uniform window.
std::vector<DemandEntry> generate_demand(const DemandSpec& spec, std::uint64_t seed);

// Measurement segment for travel-time statistics: time from reaching any of
// `from_nodes` to reaching any of `to_nodes` afterwards, for agents of
// `group`. `cycle`/`role` tag the segment as the disembark or board half of a
// landing cycle.
struct SegmentDefinition {
  std::string label;
  std::string group;
  std::vector<std::string> from_nodes;
  std::vector<std::string> to_nodes;
  std::string cycle;
  std::string role;  // "disembark", "board", or empty

  friend bool operator==(const SegmentDefinition&, const SegmentDefinition&) = default;
};

struct Scenario {
  std::string name;
  std::vector<GridEnvironment> environments;
  std::vector<std::vector<FloorField>> floor_fields;
  std::vector<MesoLink> links;
  std::map<std::string, GateSchedule> schedules;
  std::vector<DemandEntry> demand;
  std::vector<SegmentDefinition> segments;
  double sim_end = 3600.0;
  std::uint64_t seed = 1;
  RelaxMode mode = RelaxMode::NashEquilibrium;
  int iterations = 1;
  double replan_fraction = 0.1;
  CaConfig ca;
  GlobalGraph graph;
};

// Raw documents making up a scenario. Paths are already resolved.
struct ScenarioDocuments {
  std::vector<std::pair<std::string, std::string>> environments;  // (default id, text)
  std::string network;
  std::string schedules;
  std::string demand;       // explicit demand CSV, or
  std::string demand_spec;  // generator input
  std::string segments;
  std::map<std::string, std::string> settings;
};

// Validates cross references, computes floor fields and the global graph.
// Throws ValidationError naming the offending id.
Scenario assemble(const ScenarioDocuments& documents);

// Manifest: `key=value` lines. Repeated `environment=` entries; `network`,
// `schedules`, `demand` or `demand_spec`, `segments` are paths relative to
// the manifest; `sim_end`, `seed`, `mode`, `iterations`, `replan_fraction`,
// `timestep`, `conflict_friction`, `move_probability_waiting`,
// `waiting_wander_weight` are settings.
ScenarioDocuments read_manifest(const std::string& path);
Scenario load_scenario(const std::string& manifest_path);

// Documents that reassemble into an equal scenario.
ScenarioDocuments serialize(const Scenario& scenario);
// Writes the documents plus a manifest into `directory`; returns the
// manifest path.
std::string write_scenario(const Scenario& scenario, const std::string& directory);

// Same inputs (fields and graph are derived and not compared).
bool same_inputs(const Scenario& a, const Scenario& b);

std::vector<GateSchedule> load_schedules(std::string_view csv);
std::string write_schedules(const std::map<std::string, GateSchedule>& schedules);
std::vector<DemandEntry> load_demand(std::string_view csv);
std::string write_demand(const std::vector<DemandEntry>& demand);
DemandSpec load_demand_spec(std::string_view csv);
std::vector<SegmentDefinition> load_segments(std::string_view csv);
std::string write_segments(const std::vector<SegmentDefinition>& segments);

}  // namespace hybridsim
