#include "hybridsim/environment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <queue>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "text.hpp"

namespace hybridsim {

std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Intermediate: return "intermediate";
    case TargetKind::Final: return "final";
    case TargetKind::Delaying: return "delaying";
    case TargetKind::Scheduled: return "scheduled";
  }
  return "?";
}

bool Target::contains(Cell c) const { return std::binary_search(cells.begin(), cells.end(), c); }

namespace {

bool four_connected(const std::vector<Cell>& cells) {
  if (cells.empty()) return false;
  std::set<Cell> remaining(cells.begin(), cells.end());
  std::vector<Cell> stack{cells.front()};
  remaining.erase(cells.front());
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (const Offset o : kVonNeumannNeighborhood) {
      const Cell n{c.x + o.dx, c.y + o.dy};
      if (auto it = remaining.find(n); it != remaining.end()) {
        remaining.erase(it);
        stack.push_back(n);
      }
    }
  }
  return remaining.empty();
}

bool valid_label(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

}  // namespace

Cell geometric_median_cell(const std::vector<Cell>& cells) {
  if (cells.empty()) throw ValidationError("geometric median of an empty cell set");
  std::vector<Cell> sorted = cells;
  std::sort(sorted.begin(), sorted.end());
  Cell best = sorted.front();
  double best_sum = kUnreachable;
  for (const Cell c : sorted) {
    double sum = 0.0;
    for (const Cell o : sorted) sum += std::hypot(c.x - o.x, c.y - o.y);
    // Row-major iteration keeps the first (lowest row, then column) on ties.
    if (sum < best_sum - 1e-9) {
      best_sum = sum;
      best = c;
    }
  }
  return best;
}

GridEnvironment GridEnvironment::create(std::string id, int width, int height,
                                        std::vector<std::int32_t> cells,
                                        std::vector<Target> targets, double free_speed) {
  if (width <= 0 || height <= 0) {
    throw ValidationError(fmt::format("environment '{}': width and height must be positive", id));
  }
  if (cells.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ValidationError(fmt::format("environment '{}': cell array has wrong size", id));
  }
  if (!(free_speed > 0.0)) {
    throw ValidationError(fmt::format("environment '{}': free speed must be positive", id));
  }

  GridEnvironment env;
  env.id_ = std::move(id);
  env.width_ = width;
  env.height_ = height;
  env.free_speed_ = free_speed;
  env.cells_ = std::move(cells);
  env.targets_ = std::move(targets);

  std::set<std::string> labels;
  std::set<std::string> nodes;
  for (auto& t : env.targets_) {
    if (!labels.insert(t.label).second) {
      throw ValidationError(fmt::format("environment '{}': duplicate target id '{}'", env.id_, t.label));
    }
    if (t.node_id.empty()) t.node_id = env.id_ + ":" + t.label;
    if (!nodes.insert(t.node_id).second) {
      throw ValidationError(fmt::format("environment '{}': node '{}' bound twice", env.id_, t.node_id));
    }
    t.cells.clear();
  }
  for (std::size_t i = 0; i < env.cells_.size(); ++i) {
    const std::int32_t code = env.cells_[i];
    if (code == kObstacleCode || code == kWalkableCode) continue;
    if (code < 0 || static_cast<std::size_t>(code) >= env.targets_.size()) {
      throw ValidationError(fmt::format("environment '{}': invalid cell code {}", env.id_, code));
    }
    env.targets_[static_cast<std::size_t>(code)].cells.push_back(env.cell_at(i));
  }
  for (auto& t : env.targets_) {
    if (t.cells.empty()) {
      throw ValidationError(fmt::format("environment '{}': target '{}' has no cells", env.id_, t.label));
    }
    std::sort(t.cells.begin(), t.cells.end());
    if (!four_connected(t.cells)) {
      throw ValidationError(
          fmt::format("environment '{}': target '{}' cells are not 4-connected", env.id_, t.label));
    }
    if (t.kind == TargetKind::Final) {
      for (const Cell c : t.cells) {
        if (!env.on_border(c)) {
          throw ValidationError(fmt::format(
              "environment '{}': final target '{}' not on border (cell {},{})", env.id_, t.label, c.x, c.y));
        }
      }
    }
    if (t.kind == TargetKind::Scheduled && t.schedule_id.empty()) {
      throw ValidationError(
          fmt::format("environment '{}': scheduled target '{}' needs a schedule", env.id_, t.label));
    }
    if (t.kind == TargetKind::Delaying && !(t.delay.seconds >= 0.0)) {
      throw ValidationError(
          fmt::format("environment '{}': delaying target '{}' has a negative delay", env.id_, t.label));
    }
    t.center = geometric_median_cell(t.cells);
  }
  return env;
}

CellKind GridEnvironment::kind(Cell c) const {
  const auto code = this->code(c);
  if (code == kObstacleCode) return CellKind::Obstacle;
  if (code == kWalkableCode) return CellKind::Walkable;
  return CellKind::TargetCell;
}

std::optional<std::size_t> GridEnvironment::target_at(Cell c) const {
  const auto code = this->code(c);
  if (code < 0) return std::nullopt;
  return static_cast<std::size_t>(code);
}

std::optional<std::size_t> GridEnvironment::find_target(std::string_view label) const {
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (targets_[i].label == label) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> GridEnvironment::find_target_by_node(std::string_view node_id) const {
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (targets_[i].node_id == node_id) return i;
  }
  return std::nullopt;
}

std::vector<BorderBinding> GridEnvironment::border_nodes() const {
  std::vector<BorderBinding> out;
  for (const auto& t : targets_) {
    if (t.kind == TargetKind::Final) out.push_back({t.label, t.node_id});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Document I/O

namespace {

DelaySpec parse_delay(std::string_view value) {
  DelaySpec spec;
  if (text::starts_with(value, "exp:")) {
    spec.distribution = DelaySpec::Distribution::Exponential;
    value.remove_prefix(4);
  } else if (text::starts_with(value, "const:")) {
    value.remove_prefix(6);
  }
  spec.seconds = text::parse_number<double>(value, "delay");
  if (spec.seconds < 0.0) throw ValidationError("delay must be non-negative");
  return spec;
}

TargetKind parse_kind(std::string_view value) {
  if (value == "intermediate") return TargetKind::Intermediate;
  if (value == "final") return TargetKind::Final;
  if (value == "delaying") return TargetKind::Delaying;
  if (value == "scheduled") return TargetKind::Scheduled;
  throw ValidationError("unknown target kind '" + std::string(value) + "'");
}

struct RectSpec {
  int x0, y0, x1, y1;
};

}  // namespace

GridEnvironment load_environment(std::string_view document, std::string_view default_id) {
  std::string id(default_id);
  int width = -1;
  int height = -1;
  double free_speed = kDefaultFreeSpeed;
  std::vector<std::string_view> grid;
  std::vector<Target> targets;
  std::map<char, std::size_t> label_index;
  std::vector<std::pair<std::size_t, RectSpec>> rects;

  enum class Section { Header, Grid, Targets } section = Section::Header;
  std::size_t line_no = 0;
  for (std::string_view raw : text::lines(document)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == ';') continue;
    const auto where = [&] { return fmt::format("line {}", line_no); };

    if (section == Section::Header) {
      const auto eq = line.find('=');
      const bool is_header = eq != std::string_view::npos && line.find(' ') == std::string_view::npos &&
                             !text::starts_with(line, "target");
      if (is_header) {
        const auto key = line.substr(0, eq);
        const auto value = line.substr(eq + 1);
        if (key == "width") {
          width = text::parse_number<int>(value, "width");
        } else if (key == "height") {
          height = text::parse_number<int>(value, "height");
        } else if (key == "id") {
          id = std::string(value);
        } else if (key == "free_speed") {
          free_speed = text::parse_number<double>(value, "free_speed");
        } else {
          throw ValidationError(fmt::format("{}: unknown header '{}'", where(), key));
        }
        continue;
      }
      if (width <= 0 || height <= 0) {
        throw ValidationError(fmt::format("{}: width/height headers missing or invalid", where()));
      }
      section = Section::Grid;
    }

    if (section == Section::Grid) {
      if (static_cast<int>(line.size()) != width) {
        throw ValidationError(
            fmt::format("{}: grid row has {} cells, expected {}", where(), line.size(), width));
      }
      for (char c : line) {
        if (c != '.' && c != '#' && !valid_label(c)) {
          throw ValidationError(fmt::format("{}: invalid grid character '{}'", where(), c));
        }
      }
      grid.push_back(line);
      if (static_cast<int>(grid.size()) == height) section = Section::Targets;
      continue;
    }

    const auto parts = text::tokens(line);
    if (parts.size() < 2 || parts[0] != "target") {
      throw ValidationError(fmt::format("{}: expected a target line", where()));
    }
    if (parts[1].size() != 1 || !valid_label(parts[1][0])) {
      throw ValidationError(fmt::format("{}: invalid target label '{}'", where(), parts[1]));
    }
    const char label = parts[1][0];
    if (label_index.count(label) != 0) {
      throw ValidationError(fmt::format("{}: duplicate target id '{}'", where(), label));
    }
    Target t;
    t.label = std::string(1, label);
    bool has_kind = false;
    for (std::size_t i = 2; i < parts.size(); ++i) {
      const auto eq = parts[i].find('=');
      if (eq == std::string_view::npos) {
        throw ValidationError(fmt::format("{}: malformed attribute '{}'", where(), parts[i]));
      }
      const auto key = parts[i].substr(0, eq);
      const auto value = parts[i].substr(eq + 1);
      if (key == "kind") {
        t.kind = parse_kind(value);
        has_kind = true;
      } else if (key == "delay") {
        t.delay = parse_delay(value);
      } else if (key == "schedule") {
        t.schedule_id = std::string(value);
      } else if (key == "node") {
        t.node_id = std::string(value);
      } else if (key == "rect") {
        const auto nums = text::split(value, ',');
        if (nums.size() != 4) throw ValidationError(fmt::format("{}: rect needs x0,y0,x1,y1", where()));
        RectSpec r{text::parse_number<int>(nums[0], "rect"), text::parse_number<int>(nums[1], "rect"),
                   text::parse_number<int>(nums[2], "rect"), text::parse_number<int>(nums[3], "rect")};
        rects.emplace_back(targets.size(), r);
      } else {
        throw ValidationError(fmt::format("{}: unknown target attribute '{}'", where(), key));
      }
    }
    if (!has_kind) throw ValidationError(fmt::format("{}: target '{}' has no kind", where(), label));
    label_index[label] = targets.size();
    targets.push_back(std::move(t));
  }

  if (width <= 0 || height <= 0) throw ValidationError("width/height headers missing");
  if (static_cast<int>(grid.size()) != height) {
    throw ValidationError(fmt::format("grid has {} rows, expected {}", grid.size(), height));
  }

  std::vector<std::int32_t> cells(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                                  GridEnvironment::kWalkableCode);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const char c = grid[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      auto& code = cells[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                         static_cast<std::size_t>(x)];
      if (c == '#') {
        code = GridEnvironment::kObstacleCode;
      } else if (c != '.') {
        const auto it = label_index.find(c);
        if (it == label_index.end()) {
          throw ValidationError(fmt::format("grid uses undeclared target label '{}'", c));
        }
        code = static_cast<std::int32_t>(it->second);
      }
    }
  }
  for (const auto& [target, r] : rects) {
    for (int y = std::min(r.y0, r.y1); y <= std::max(r.y0, r.y1); ++y) {
      for (int x = std::min(r.x0, r.x1); x <= std::max(r.x0, r.x1); ++x) {
        if (x < 0 || y < 0 || x >= width || y >= height) {
          throw ValidationError(fmt::format("target '{}' rect leaves the grid", targets[target].label));
        }
        auto& code = cells[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                           static_cast<std::size_t>(x)];
        if (code == GridEnvironment::kObstacleCode) {
          throw ValidationError(fmt::format("target/obstacle overlap: target '{}' at cell {},{}",
                                            targets[target].label, x, y));
        }
        if (code >= 0 && static_cast<std::size_t>(code) != target) {
          throw ValidationError(fmt::format("target/target overlap: target '{}' at cell {},{}",
                                            targets[target].label, x, y));
        }
        code = static_cast<std::int32_t>(target);
      }
    }
  }
  return GridEnvironment::create(std::move(id), width, height, std::move(cells), std::move(targets),
                                 free_speed);
}

GridEnvironment load_environment_file(const std::string& path) {
  std::string stem = path;
  if (const auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (const auto dot = stem.find('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  try {
    return load_environment(text::read_file(path), stem);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string write_environment(const GridEnvironment& env) {
  std::string out;
  out += fmt::format("id={}\nwidth={}\nheight={}\nfree_speed={}\n", env.id(), env.width(), env.height(),
                     env.free_speed());
  for (int y = 0; y < env.height(); ++y) {
    for (int x = 0; x < env.width(); ++x) {
      const Cell c{x, y};
      const auto code = env.code(c);
      if (code == GridEnvironment::kObstacleCode) {
        out += '#';
      } else if (code == GridEnvironment::kWalkableCode) {
        out += '.';
      } else {
        out += env.target(static_cast<std::size_t>(code)).label;
      }
    }
    out += '\n';
  }
  for (const auto& t : env.targets()) {
    out += fmt::format("target {} kind={}", t.label, to_string(t.kind));
    if (t.kind == TargetKind::Delaying) {
      out += t.delay.distribution == DelaySpec::Distribution::Exponential
                 ? fmt::format(" delay=exp:{}", t.delay.seconds)
                 : fmt::format(" delay={}", t.delay.seconds);
    }
    if (!t.schedule_id.empty()) out += fmt::format(" schedule={}", t.schedule_id);
    out += fmt::format(" node={}\n", t.node_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Floor fields

bool cuts_corner(const GridEnvironment& env, Cell from, Offset o) {
  if (!o.diagonal()) return false;
  const Cell a{from.x + o.dx, from.y};
  const Cell b{from.x, from.y + o.dy};
  return env.is_obstacle(a) || env.is_obstacle(b);
}

FloorField compute_floor_field(const GridEnvironment& env, std::size_t target) {
  if (target >= env.targets().size()) {
    throw LookupError(fmt::format("environment '{}': unknown target index {}", env.id(), target));
  }
  const auto self = static_cast<std::int32_t>(target);
  std::vector<double> dist(env.cell_count(), kUnreachable);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  for (const Cell c : env.target(target).cells) {
    dist[env.index(c)] = 0.0;
    frontier.emplace(0.0, env.index(c));
  }
  while (!frontier.empty()) {
    const auto [d, idx] = frontier.top();
    frontier.pop();
    if (d > dist[idx]) continue;
    const Cell c = env.cell_at(idx);
    const std::int32_t here = env.code(c);
    const bool inside_other = here >= 0 && here != self;
    for (const Offset o : kMooreNeighborhood) {
      const Cell n{c.x + o.dx, c.y + o.dy};
      if (!env.in_bounds(n) || env.is_obstacle(n) || cuts_corner(env, c, o)) continue;
      const std::int32_t there = env.code(n);
      if (inside_other && there != here) continue;
      const double nd = d + step_length(o);
      const std::size_t nidx = env.index(n);
      if (nd < dist[nidx]) {
        dist[nidx] = nd;
        frontier.emplace(nd, nidx);
      }
    }
  }
  return FloorField(target, env.width(), std::move(dist));
}

FloorField compute_floor_field(const GridEnvironment& env, std::string_view target_label) {
  const auto idx = env.find_target(target_label);
  if (!idx) {
    throw LookupError(fmt::format("environment '{}': unknown target '{}'", env.id(), target_label));
  }
  return compute_floor_field(env, *idx);
}

std::vector<FloorField> compute_all_floor_fields(const GridEnvironment& env) {
  const std::size_t n = env.targets().size();
  std::vector<FloorField> fields(n);
  if (n > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::future<FloorField>> jobs;
    jobs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      jobs.push_back(std::async(std::launch::async, [&env, i] { return compute_floor_field(env, i); }));
    }
    for (std::size_t i = 0; i < n; ++i) fields[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < n; ++i) fields[i] = compute_floor_field(env, i);
  }
  return fields;
}

std::vector<NetworkEdge> extract_network(const GridEnvironment& env,
                                         const std::vector<FloorField>& fields) {
  return extract_network(env, fields, env.free_speed());
}

std::vector<NetworkEdge> extract_network(const GridEnvironment& env,
                                         const std::vector<FloorField>& fields, double free_speed) {
  const auto& targets = env.targets();
  if (fields.size() != targets.size()) {
    throw LookupError(fmt::format("environment '{}': expected {} floor fields, got {}", env.id(),
                                  targets.size(), fields.size()));
  }
  std::vector<NetworkEdge> edges;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = i + 1; j < targets.size(); ++j) {
      const double a = fields[i].at(targets[j].center);
      const double b = fields[j].at(targets[i].center);
      if (a == kUnreachable || b == kUnreachable) continue;
      const double length = 0.5 * (a + b);
      edges.push_back({i, j, length, free_speed, length / free_speed});
    }
  }
  return edges;
}

}  // namespace hybridsim
