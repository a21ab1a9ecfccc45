#include "hybridsim/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "text.hpp"

namespace hybridsim {

namespace {

// Rows of a CSV document with a fixed header. Blank lines and ';' comments
// are skipped.
std::vector<std::vector<std::string_view>> csv_rows(std::string_view csv, std::string_view header,
                                                    std::string_view what) {
  std::vector<std::vector<std::string_view>> rows;
  const auto expected = text::split(header, ',').size();
  bool header_seen = false;
  std::size_t line_no = 0;
  for (const auto raw : text::lines(csv)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == ';') continue;
    if (!header_seen) {
      if (line != header) {
        throw ValidationError(fmt::format("{} line {}: expected header '{}'", what, line_no, header));
      }
      header_seen = true;
      continue;
    }
    auto fields = text::split(line, ',');
    if (fields.size() != expected) {
      throw ValidationError(
          fmt::format("{} line {}: expected {} fields, got {}", what, line_no, expected, fields.size()));
    }
    for (auto& f : fields) f = text::trim(f);
    rows.push_back(std::move(fields));
  }
  if (!header_seen) throw ValidationError(fmt::format("{} document is empty", what));
  return rows;
}

constexpr std::string_view kScheduleHeader = "schedule_id,open_s,close_s";
constexpr std::string_view kDemandHeader = "agent_id,origin,destination,departure_s,group";
constexpr std::string_view kDemandSpecHeader = "group,count,origin,destination,departure,window_start_s,window_end_s";
constexpr std::string_view kSegmentHeader = "label,group,from_nodes,to_nodes,cycle,role";

std::vector<std::string> split_nodes(std::string_view field) {
  std::vector<std::string> out;
  for (const auto part : text::split(field, '|')) {
    const auto trimmed = text::trim(part);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

std::string join_nodes(const std::vector<std::string>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) out += '|';
    out += nodes[i];
  }
  return out;
}

}  // namespace

std::vector<GateSchedule> load_schedules(std::string_view csv) {
  std::map<std::string, GateSchedule> by_id;
  std::vector<std::string> order;
  for (const auto& row : csv_rows(csv, kScheduleHeader, "schedules")) {
    std::string id(row[0]);
    if (id.empty()) throw ValidationError("schedules: empty schedule id");
    auto [it, inserted] = by_id.try_emplace(id);
    if (inserted) {
      it->second.id = id;
      order.push_back(id);
    }
    it->second.windows.push_back(
        {text::parse_number<double>(row[1], "open_s"), text::parse_number<double>(row[2], "close_s")});
  }
  std::vector<GateSchedule> out;
  for (const auto& id : order) {
    auto s = by_id[id];
    std::sort(s.windows.begin(), s.windows.end(),
              [](const TimeWindow& a, const TimeWindow& b) { return a.open < b.open; });
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::string write_schedules(const std::map<std::string, GateSchedule>& schedules) {
  std::string out(kScheduleHeader);
  out += '\n';
  for (const auto& [id, s] : schedules) {
    for (const auto& w : s.windows) out += fmt::format("{},{},{}\n", id, w.open, w.close);
  }
  return out;
}

std::vector<DemandEntry> load_demand(std::string_view csv) {
  std::vector<DemandEntry> out;
  for (const auto& row : csv_rows(csv, kDemandHeader, "demand")) {
    out.push_back({std::string(row[0]), std::string(row[1]), std::string(row[2]),
                   text::parse_number<double>(row[3], "departure_s"), std::string(row[4])});
  }
  return out;
}

std::string write_demand(const std::vector<DemandEntry>& demand) {
  std::string out(kDemandHeader);
  out += '\n';
  for (const auto& d : demand) {
    out += fmt::format("{},{},{},{},{}\n", d.agent_id, d.origin, d.destination, d.departure, d.group);
  }
  return out;
}

DemandSpec load_demand_spec(std::string_view csv) {
  DemandSpec spec;
  for (const auto& row : csv_rows(csv, kDemandSpecHeader, "demand spec")) {
    DemandGroup g;
    g.tag = std::string(row[0]);
    g.count = text::parse_number<std::int64_t>(row[1], "count");
    g.origin = std::string(row[2]);
    g.destination = std::string(row[3]);
    if (row[4] == "at_once") {
      g.process = DepartureProcess::AllAtOnce;
    } else if (row[4] == "uniform") {
      g.process = DepartureProcess::Uniform;
    } else {
      throw ValidationError(fmt::format("demand spec: unknown departure process '{}'", row[4]));
    }
    g.window_start = text::parse_number<double>(row[5], "window_start_s");
    g.window_end = row[6].empty() ? g.window_start : text::parse_number<double>(row[6], "window_end_s");
    spec.groups.push_back(std::move(g));
  }
  return spec;
}

std::vector<DemandEntry> generate_demand(const DemandSpec& spec, std::uint64_t seed) {
  std::vector<DemandEntry> out;
  for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
    const auto& g = spec.groups[gi];
    if (g.count < 0) {
      throw ValidationError(fmt::format("demand group '{}': count must be non-negative", g.tag));
    }
    std::vector<double> times(static_cast<std::size_t>(g.count), g.window_start);
    if (g.process == DepartureProcess::Uniform && g.count > 0) {
      if (!(g.window_end > g.window_start)) {
        throw ValidationError(fmt::format("demand group '{}': uniform window is empty", g.tag));
      }
      Rng rng(mix_seed(seed, 0x0D3A'0000ULL + gi));
      for (auto& t : times) t = g.window_start + rng.uniform() * (g.window_end - g.window_start);
      std::sort(times.begin(), times.end());
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      out.push_back({fmt::format("{}-{}", g.tag, k + 1), g.origin, g.destination, times[k], g.tag});
    }
  }
  return out;
}

std::vector<SegmentDefinition> load_segments(std::string_view csv) {
  std::vector<SegmentDefinition> out;
  for (const auto& row : csv_rows(csv, kSegmentHeader, "segments")) {
    SegmentDefinition s{std::string(row[0]), std::string(row[1]), split_nodes(row[2]),
                        split_nodes(row[3]), std::string(row[4]), std::string(row[5])};
    if (s.label.empty() || s.from_nodes.empty() || s.to_nodes.empty()) {
      throw ValidationError(fmt::format("segments: incomplete definition '{}'", s.label));
    }
    if (!s.role.empty() && s.role != "disembark" && s.role != "board") {
      throw ValidationError(fmt::format("segments: unknown role '{}'", s.role));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string write_segments(const std::vector<SegmentDefinition>& segments) {
  std::string out(kSegmentHeader);
  out += '\n';
  for (const auto& s : segments) {
    out += fmt::format("{},{},{},{},{},{}\n", s.label, s.group, join_nodes(s.from_nodes),
                       join_nodes(s.to_nodes), s.cycle, s.role);
  }
  return out;
}

Scenario assemble(const ScenarioDocuments& docs) {
  Scenario sc;
  for (const auto& [key, value] : docs.settings) {
    if (key == "name") {
      sc.name = value;
    } else if (key == "sim_end") {
      sc.sim_end = text::parse_number<double>(value, "sim_end");
    } else if (key == "seed") {
      sc.seed = text::parse_number<std::uint64_t>(value, "seed");
    } else if (key == "mode") {
      sc.mode = parse_relax_mode(value);
    } else if (key == "iterations") {
      sc.iterations = text::parse_number<int>(value, "iterations");
    } else if (key == "replan_fraction") {
      sc.replan_fraction = text::parse_number<double>(value, "replan_fraction");
    } else if (key == "timestep") {
      sc.ca.timestep = text::parse_number<double>(value, "timestep");
    } else if (key == "conflict_friction") {
      sc.ca.conflict_friction = text::parse_number<double>(value, "conflict_friction");
    } else if (key == "move_probability_waiting") {
      sc.ca.move_probability_waiting = text::parse_number<double>(value, "move_probability_waiting");
    } else if (key == "waiting_wander_weight") {
      sc.ca.waiting_wander_weight = text::parse_number<double>(value, "waiting_wander_weight");
    } else {
      throw ValidationError(fmt::format("unknown scenario setting '{}'", key));
    }
  }
  if (!(sc.sim_end > 0.0)) throw ValidationError("sim_end must be positive");
  if (sc.iterations < 1) throw ValidationError("iterations must be at least 1");
  if (!(sc.replan_fraction >= 0.0 && sc.replan_fraction <= 1.0)) {
    throw ValidationError("replan_fraction must lie in [0,1]");
  }
  sc.ca.rng_seed = sc.seed;
  sc.ca.validate();

  for (const auto& [default_id, doc] : docs.environments) {
    try {
      sc.environments.push_back(load_environment(doc, default_id));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("environment '{}': {}", default_id, e.what()));
    }
  }
  if (!docs.network.empty()) sc.links = load_network(docs.network);
  if (!docs.schedules.empty()) {
    for (auto& s : load_schedules(docs.schedules)) {
      const std::string id = s.id;
      sc.schedules.emplace(id, std::move(s));
    }
  }
  for (const auto& env : sc.environments) {
    for (const auto& t : env.targets()) {
      if (t.kind == TargetKind::Scheduled && sc.schedules.count(t.schedule_id) == 0) {
        throw ValidationError(fmt::format("environment '{}': target '{}' references unknown schedule '{}'",
                                          env.id(), t.label, t.schedule_id));
      }
    }
  }

  for (const auto& env : sc.environments) sc.floor_fields.push_back(compute_all_floor_fields(env));
  sc.graph = build_global_graph(sc.environments, sc.floor_fields, sc.links);

  if (!docs.demand.empty()) {
    sc.demand = load_demand(docs.demand);
  } else if (!docs.demand_spec.empty()) {
    sc.demand = generate_demand(load_demand_spec(docs.demand_spec), sc.seed);
  }
  std::set<std::string> agent_ids;
  for (const auto& d : sc.demand) {
    if (!agent_ids.insert(d.agent_id).second) {
      throw ValidationError(fmt::format("demand: duplicate agent id '{}'", d.agent_id));
    }
    const auto o = sc.graph.node_index(d.origin);
    if (!o) throw ValidationError(fmt::format("demand: unknown node '{}' (agent {})", d.origin, d.agent_id));
    const auto t = sc.graph.node_index(d.destination);
    if (!t) {
      throw ValidationError(fmt::format("demand: unknown node '{}' (agent {})", d.destination, d.agent_id));
    }
    if (!(d.departure >= 0.0 && d.departure < sc.sim_end)) {
      throw ValidationError(fmt::format("demand: agent {} departs outside [0, sim_end)", d.agent_id));
    }
  }
  std::set<std::pair<std::string, std::string>> od_checked;
  for (const auto& d : sc.demand) {
    if (!od_checked.insert({d.origin, d.destination}).second) continue;
    if (!sc.graph.reachable(*sc.graph.node_index(d.origin), *sc.graph.node_index(d.destination))) {
      throw ValidationError(fmt::format("demand: '{}' -> '{}' is not connected", d.origin, d.destination));
    }
  }

  if (!docs.segments.empty()) sc.segments = load_segments(docs.segments);
  for (const auto& s : sc.segments) {
    for (const auto* list : {&s.from_nodes, &s.to_nodes}) {
      for (const auto& n : *list) {
        if (!sc.graph.node_index(n)) {
          throw ValidationError(fmt::format("segment '{}': unknown node '{}'", s.label, n));
        }
      }
    }
  }
  return sc;
}

ScenarioDocuments read_manifest(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(path).parent_path();
  const auto resolve = [&base](std::string_view p) { return (base / fs::path(std::string(p))).string(); };
  ScenarioDocuments docs;
  std::size_t line_no = 0;
  const std::string content = text::read_file(path);
  for (const auto raw : text::lines(content)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == ';' || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(fmt::format("{} line {}: expected key=value", path, line_no));
    }
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    if (key == "environment") {
      const auto file = resolve(value);
      docs.environments.emplace_back(fs::path(file).stem().string(), text::read_file(file));
    } else if (key == "network") {
      docs.network = text::read_file(resolve(value));
    } else if (key == "schedules") {
      docs.schedules = text::read_file(resolve(value));
    } else if (key == "demand") {
      docs.demand = text::read_file(resolve(value));
    } else if (key == "demand_spec") {
      docs.demand_spec = text::read_file(resolve(value));
    } else if (key == "segments") {
      docs.segments = text::read_file(resolve(value));
    } else {
      docs.settings[std::string(key)] = std::string(value);
    }
  }
  return docs;
}

Scenario load_scenario(const std::string& manifest_path) {
  Scenario sc = assemble(read_manifest(manifest_path));
  if (sc.name.empty()) sc.name = std::filesystem::path(manifest_path).stem().string();
  return sc;
}

ScenarioDocuments serialize(const Scenario& sc) {
  ScenarioDocuments docs;
  for (const auto& env : sc.environments) docs.environments.emplace_back(env.id(), write_environment(env));
  docs.network = write_network(sc.links);
  docs.schedules = write_schedules(sc.schedules);
  docs.demand = write_demand(sc.demand);
  docs.segments = write_segments(sc.segments);
  if (!sc.name.empty()) docs.settings["name"] = sc.name;
  docs.settings["sim_end"] = fmt::format("{}", sc.sim_end);
  docs.settings["seed"] = fmt::format("{}", sc.seed);
  docs.settings["mode"] = std::string(to_string(sc.mode));
  docs.settings["iterations"] = fmt::format("{}", sc.iterations);
  docs.settings["replan_fraction"] = fmt::format("{}", sc.replan_fraction);
  docs.settings["timestep"] = fmt::format("{}", sc.ca.timestep);
  docs.settings["conflict_friction"] = fmt::format("{}", sc.ca.conflict_friction);
  docs.settings["move_probability_waiting"] = fmt::format("{}", sc.ca.move_probability_waiting);
  docs.settings["waiting_wander_weight"] = fmt::format("{}", sc.ca.waiting_wander_weight);
  return docs;
}

std::string write_scenario(const Scenario& sc, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const auto docs = serialize(sc);
  std::string manifest;
  for (const auto& [id, text] : docs.environments) {
    const std::string file = id + ".env";
    text::write_file((fs::path(directory) / file).string(), text);
    manifest += "environment=" + file + "\n";
  }
  const auto emit = [&](const char* key, const char* file, const std::string& content) {
    text::write_file((fs::path(directory) / file).string(), content);
    manifest += fmt::format("{}={}\n", key, file);
  };
  emit("network", "network.csv", docs.network);
  emit("schedules", "schedules.csv", docs.schedules);
  emit("demand", "demand.csv", docs.demand);
  emit("segments", "segments.csv", docs.segments);
  for (const auto& [key, value] : docs.settings) manifest += fmt::format("{}={}\n", key, value);
  const auto path = (fs::path(directory) / "scenario.manifest").string();
  text::write_file(path, manifest);
  return path;
}

bool same_inputs(const Scenario& a, const Scenario& b) {
  return a.name == b.name && a.environments == b.environments && a.links == b.links &&
         a.schedules == b.schedules && a.demand == b.demand && a.segments == b.segments &&
         a.sim_end == b.sim_end && a.seed == b.seed && a.mode == b.mode && a.iterations == b.iterations &&
         a.replan_fraction == b.replan_fraction && a.ca.timestep == b.ca.timestep &&
         a.ca.conflict_friction == b.ca.conflict_friction &&
         a.ca.move_probability_waiting == b.ca.move_probability_waiting &&
         a.ca.waiting_wander_weight == b.ca.waiting_wander_weight;
}

}  // namespace hybridsim
