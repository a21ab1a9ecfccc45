#include "hybridsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "text.hpp"

namespace hybridsim {

double nearest_rank(const std::vector<double>& sorted, int percent) {
  if (sorted.empty()) throw ValidationError("percentile of an empty set");
  const std::size_t n = sorted.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

StatsRow compute_stats(std::string label, std::vector<double> durations) {
  StatsRow row;
  row.label = std::move(label);
  row.n = durations.size();
  if (durations.empty()) return row;
  std::sort(durations.begin(), durations.end());
  const double n = static_cast<double>(durations.size());
  const double shift = durations.front();
  double sum = 0.0;
  double dsum = 0.0;
  double dsq = 0.0;
  for (const double x : durations) {
    sum += x;
    const double d = x - shift;
    dsum += d;
    dsq += d * d;
  }
  row.min = durations.front();
  row.max = durations.back();
  row.avg = sum / n;
  row.var = std::max(0.0, (n * dsq - dsum * dsum) / (n * n));
  row.sd = std::sqrt(row.var);
  row.p75 = nearest_rank(durations, 75);
  row.p95 = nearest_rank(durations, 95);
  row.total = row.max;
  return row;
}

namespace {

std::vector<std::string> split_nodes(std::string_view field) {
  std::vector<std::string> out;
  for (const auto part : text::split(field, '|')) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

bool reaches_node(const EventRecord& r) { return r.kind == event_kind::kDepart || r.kind == event_kind::kNode; }

}  // namespace

std::vector<double> segment_durations(const EventLog& log, const SegmentDefinition& segment) {
  const std::set<std::string> from(segment.from_nodes.begin(), segment.from_nodes.end());
  const std::set<std::string> to(segment.to_nodes.begin(), segment.to_nodes.end());
  struct Progress {
    bool member = false;
    bool started = false;
    bool done = false;
    double start = 0.0;
    double duration = 0.0;
  };
  std::map<std::string, Progress> agents;
  std::vector<std::string> order;
  for (const auto& r : log.records()) {
    if (r.kind == event_kind::kDepart) {
      auto [it, inserted] = agents.try_emplace(r.agent);
      if (inserted) order.push_back(r.agent);
      it->second.member = segment.group.empty() || detail_value(r.detail, "group") == segment.group;
    }
    if (!reaches_node(r)) continue;
    const auto it = agents.find(r.agent);
    if (it == agents.end() || !it->second.member || it->second.done) continue;
    auto& p = it->second;
    if (!p.started) {
      if (from.count(r.subject) != 0) {
        p.started = true;
        p.start = r.time;
      }
    } else if (to.count(r.subject) != 0) {
      p.done = true;
      p.duration = r.time - p.start;
    }
  }
  std::vector<double> out;
  for (const auto& id : order) {
    const auto& p = agents[id];
    if (p.member && p.done) out.push_back(p.duration);
  }
  return out;
}

std::vector<SegmentDefinition> segments_from_log(const EventLog& log) {
  std::vector<SegmentDefinition> out;
  for (const auto& r : log.records()) {
    if (r.kind != event_kind::kSegment) continue;
    out.push_back({r.subject, std::string(detail_value(r.detail, "group")),
                   split_nodes(detail_value(r.detail, "from")), split_nodes(detail_value(r.detail, "to")),
                   std::string(detail_value(r.detail, "cycle")), std::string(detail_value(r.detail, "role"))});
  }
  return out;
}

std::vector<StatsRow> travel_time_stats(const EventLog& log, const std::vector<SegmentDefinition>& segments) {
  std::vector<StatsRow> rows;
  rows.reserve(segments.size());
  for (const auto& s : segments) rows.push_back(compute_stats(s.label, segment_durations(log, s)));
  return rows;
}

std::string write_stats(const std::vector<StatsRow>& rows) {
  std::string out = "group,n,min_s,max_s,avg_s,var_s2,sd_s,p75_s,p95_s,total_s\n";
  for (const auto& r : rows) {
    if (r.empty()) {
      out += fmt::format("{},0,,,,,,,,\n", r.label);
      continue;
    }
    out += fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f}\n", r.label, r.n, r.min, r.max,
                       r.avg, r.var, r.sd, r.p75, r.p95, r.total);
  }
  return out;
}

std::vector<LandingCycle> landing_cycle_report(const EventLog& log) {
  std::vector<LandingCycle> cycles;
  const auto slot = [&cycles](const std::string& id) -> LandingCycle& {
    for (auto& c : cycles) {
      if (c.cycle == id) return c;
    }
    cycles.push_back({});
    cycles.back().cycle = id;
    return cycles.back();
  };
  for (const auto& s : segments_from_log(log)) {
    if (s.cycle.empty() || s.role.empty()) continue;
    const auto row = compute_stats(s.label, segment_durations(log, s));
    auto& c = slot(s.cycle);
    if (s.role == "disembark") {
      c.disembark = std::max(c.disembark, row.total);
      c.disembark_n += row.n;
    } else if (s.role == "board") {
      c.board = std::max(c.board, row.total);
      c.board_n += row.n;
    }
  }
  if (cycles.empty()) throw ValidationError("log carries no landing-cycle segment tags");
  for (auto& c : cycles) c.total = c.disembark + c.board;
  return cycles;
}

std::string write_cycle_report(const std::vector<LandingCycle>& cycles) {
  std::string out = "cycle,disembark_n,disembark_s,board_n,board_s,total_s\n";
  for (const auto& c : cycles) {
    out += fmt::format("{},{},{:.2f},{},{:.2f},{:.2f}\n", c.cycle, c.disembark_n, c.disembark, c.board_n, c.board,
                       c.total);
  }
  return out;
}

GridEnvironment bottleneck_room(double omega, const BottleneckConfig& config) {
  const int width = config.room_width;
  const int opening = static_cast<int>(std::lround(omega / kCellSide));
  if (opening < 1 || opening > width) {
    throw ValidationError(fmt::format("bottleneck opening {} m does not fit the room", omega));
  }
  if (config.source_rows < 1 || config.exit_rows < 0) throw ValidationError("bottleneck room too small");
  const int wall = config.source_rows;
  const int height = config.source_rows + 1 + config.exit_rows + 1;
  std::vector<std::int32_t> codes(static_cast<std::size_t>(width * height), GridEnvironment::kWalkableCode);
  const int first = (width - opening) / 2;
  for (int x = 0; x < width; ++x) {
    if (x < first || x >= first + opening) codes[static_cast<std::size_t>(wall * width + x)] = GridEnvironment::kObstacleCode;
    codes[static_cast<std::size_t>((height - 1) * width + x)] = 0;
  }
  Target exit;
  exit.label = "E";
  exit.kind = TargetKind::Final;
  return GridEnvironment::create(fmt::format("bottleneck_{:.1f}", omega), width, height, std::move(codes), {exit});
}

BottleneckResult run_bottleneck(double omega, const BottleneckConfig& config) {
  const GridEnvironment env = bottleneck_room(omega, config);
  const auto fields = compute_all_floor_fields(env);
  CaConfig ca = config.ca;
  ca.rng_seed = config.seed;
  MicroWorld world(env, fields, {}, ca);

  std::vector<Cell> source;
  for (int y = 0; y < config.source_rows; ++y) {
    for (int x = 0; x < env.width(); ++x) source.push_back({x, y});
  }
  if (config.agents < 0 || static_cast<std::size_t>(config.agents) > source.size()) {
    throw ValidationError(fmt::format("{} agents do not fit the source area", config.agents));
  }
  Rng placement(mix_seed(config.seed, 1));
  placement.shuffle(std::span<Cell>(source));
  for (int i = 0; i < config.agents; ++i) {
    MicroAgent a;
    a.id = static_cast<AgentIndex>(i);
    a.cell = source[static_cast<std::size_t>(i)];
    a.route = {0};
    world.place(std::move(a));
  }

  const int wall = config.source_rows;
  std::vector<double> passages;
  Rng rng(mix_seed(config.seed, 2));
  for (std::uint64_t k = 0; world.agent_count() > 0; ++k) {
    const double t = static_cast<double>(k) * ca.timestep;
    if (t >= config.max_time) break;
    for (const auto& ev : world.step(t, rng)) {
      if (ev.kind == MicroEventKind::Move && ev.from.y <= wall && ev.to.y > wall) passages.push_back(ev.time);
      if (ev.kind == MicroEventKind::RouteEnd) world.remove(ev.agent);
    }
  }

  BottleneckResult r;
  r.omega = omega;
  r.discharged = passages.size();
  r.window_start = config.window_start;
  const double last = passages.empty() ? config.window_start : *std::max_element(passages.begin(), passages.end());
  r.window_end = std::min(config.window_end, last);
  if (r.window_end > r.window_start) {
    const auto counted = std::count_if(passages.begin(), passages.end(), [&r](double t) {
      return t >= r.window_start && t <= r.window_end;
    });
    r.flow = static_cast<double>(counted) / (r.window_end - r.window_start);
  }
  for (const double t : passages) {
    const auto bin = static_cast<std::size_t>(std::floor(t));
    if (r.per_second.size() <= bin) r.per_second.resize(bin + 1, 0);
    ++r.per_second[bin];
  }
  return r;
}

std::vector<double> omega_values(const BottleneckConfig& config) {
  if (!(config.omega_step > 0.0) || config.omega_max < config.omega_min) {
    throw ValidationError("invalid omega range");
  }
  std::vector<double> out;
  const auto steps = static_cast<int>(std::floor((config.omega_max - config.omega_min) / config.omega_step + 1e-9));
  for (int i = 0; i <= steps; ++i) out.push_back(config.omega_min + i * config.omega_step);
  return out;
}

std::vector<BottleneckResult> bottleneck_sweep(const BottleneckConfig& config) {
  std::vector<BottleneckResult> out;
  for (const double omega : omega_values(config)) out.push_back(run_bottleneck(omega, config));
  return out;
}

std::string write_bottleneck(const std::vector<BottleneckResult>& results) {
  std::string out = "omega_m,flow_agents_per_s,window_start_s,window_end_s,discharged\n";
  for (const auto& r : results) {
    out += fmt::format("{:.1f},{:.4f},{:.4f},{:.4f},{}\n", r.omega, r.flow, r.window_start, r.window_end,
                       r.discharged);
  }
  return out;
}

double max_window_density(const MicroWorld& world, int window_cells) {
  const auto& env = world.environment();
  const int w = env.width();
  const int h = env.height();
  std::vector<int> prefix(static_cast<std::size_t>((w + 1) * (h + 1)), 0);
  const auto at = [w](int x, int y) { return static_cast<std::size_t>(y * (w + 1) + x); };
  for (const auto& a : world.agents()) prefix[at(a.cell.x + 1, a.cell.y + 1)] += 1;
  for (int y = 1; y <= h; ++y) {
    for (int x = 1; x <= w; ++x) prefix[at(x, y)] += prefix[at(x - 1, y)] + prefix[at(x, y - 1)] - prefix[at(x - 1, y - 1)];
  }
  int best = 0;
  const int wx = std::min(window_cells, w);
  const int wy = std::min(window_cells, h);
  for (int y = wy; y <= h; ++y) {
    for (int x = wx; x <= w; ++x) {
      best = std::max(best, prefix[at(x, y)] - prefix[at(x - wx, y)] - prefix[at(x, y - wy)] + prefix[at(x - wx, y - wy)]);
    }
  }
  const double side = window_cells * kCellSide;
  return best / (side * side);
}

void DensityProbe::observe(const MicroWorld& world) {
  max_ = std::max(max_, max_window_density(world, window_cells_));
  ++samples_;
}

void DensityProbe::observe(const std::vector<MicroWorld>& worlds) {
  for (const auto& w : worlds) observe(w);
}

}  // namespace hybridsim
