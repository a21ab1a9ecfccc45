#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hybridsim {

inline constexpr double kCellSide = 0.4;
inline constexpr double kMaxDensity = 6.25;  // one agent per cell, p/m^2
inline constexpr double kDefaultFreeSpeed = 1.34;
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Column/row coordinate. y grows downwards in documents (row index).
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  // Row-major order: lowest row first, then column.
  friend std::strong_ordering operator<=>(const Cell& a, const Cell& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

struct Offset {
  int dx;
  int dy;
  bool diagonal() const { return dx != 0 && dy != 0; }
};

inline constexpr std::array<Offset, 8> kMooreNeighborhood{{
    {0, -1}, {-1, 0}, {1, 0}, {0, 1}, {-1, -1}, {1, -1}, {-1, 1}, {1, 1}}};

inline constexpr std::array<Offset, 4> kVonNeumannNeighborhood{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};

inline double step_length(Offset o) {
  return o.diagonal() ? kCellSide * 1.4142135623730951 : kCellSide;
}

enum class TargetKind { Intermediate, Final, Delaying, Scheduled };

std::string_view to_string(TargetKind kind);

struct DelaySpec {
  enum class Distribution { Constant, Exponential };
  Distribution distribution = Distribution::Constant;
  double seconds = 0.0;  // constant value or mean

  double mean() const { return seconds; }
  friend bool operator==(const DelaySpec&, const DelaySpec&) = default;
};

struct Target {
  std::string label;
  TargetKind kind = TargetKind::Intermediate;
  DelaySpec delay;
  std::string schedule_id;  // Scheduled targets only
  std::string node_id;      // global routing node this target stands for
  std::vector<Cell> cells;  // sorted row-major
  Cell center;

  bool contains(Cell c) const;
  friend bool operator==(const Target&, const Target&) = default;
};

enum class CellKind : std::uint8_t { Walkable, Obstacle, TargetCell };

struct BorderBinding {
  std::string target_label;
  std::string node_id;
  friend bool operator==(const BorderBinding&, const BorderBinding&) = default;
};

// Immutable discrete environment. Construct through load_environment() or
// GridEnvironment::create(), both of which validate every invariant.
class GridEnvironment {
 public:
  static constexpr std::int32_t kObstacleCode = -2;
  static constexpr std::int32_t kWalkableCode = -1;

  // `cells` holds width*height codes: kObstacleCode, kWalkableCode, or a
  // target index. Target cell lists and centers are recomputed from `cells`.
  static GridEnvironment create(std::string id, int width, int height,
                                std::vector<std::int32_t> cells,
                                std::vector<Target> targets,
                                double free_speed = kDefaultFreeSpeed);

  const std::string& id() const { return id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double cell_side() const { return kCellSide; }
  double free_speed() const { return free_speed_; }
  std::size_t cell_count() const { return cells_.size(); }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool on_border(Cell c) const {
    return c.x == 0 || c.y == 0 || c.x == width_ - 1 || c.y == height_ - 1;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width_)),
            static_cast<int>(index / static_cast<std::size_t>(width_))};
  }

  CellKind kind(Cell c) const;
  bool is_obstacle(Cell c) const { return code(c) == kObstacleCode; }
  // Target index at a cell, or nullopt for walkable/obstacle cells.
  std::optional<std::size_t> target_at(Cell c) const;
  std::int32_t code(Cell c) const { return cells_[index(c)]; }

  const std::vector<Target>& targets() const { return targets_; }
  const Target& target(std::size_t i) const { return targets_.at(i); }
  std::optional<std::size_t> find_target(std::string_view label) const;
  std::optional<std::size_t> find_target_by_node(std::string_view node_id) const;
  std::vector<BorderBinding> border_nodes() const;

  friend bool operator==(const GridEnvironment&, const GridEnvironment&) = default;

 private:
  GridEnvironment() = default;

  std::string id_;
  int width_ = 0;
  int height_ = 0;
  double free_speed_ = kDefaultFreeSpeed;
  std::vector<std::int32_t> cells_;
  std::vector<Target> targets_;
};

// Geometric median of a cell set (minimum summed Euclidean distance), ties
// broken by lowest row, then lowest column.
Cell geometric_median_cell(const std::vector<Cell>& cells);

// Parses the text environment document. `default_id` is used when the
// document carries no `id=` header. Throws ValidationError.
GridEnvironment load_environment(std::string_view document, std::string_view default_id = "env");
GridEnvironment load_environment_file(const std::string& path);
std::string write_environment(const GridEnvironment& env);

// Walking distance (meters) to one target. Diffusion runs over the Moore
// neighborhood; diagonal steps may not cut obstacle corners. Cells of other
// targets receive a value but the field only continues from them into cells
// of that same target, so a field never leaks through another target.
class FloorField {
 public:
  FloorField() = default;
  FloorField(std::size_t target, int width, std::vector<double> values)
      : target_(target), width_(width), values_(std::move(values)) {}

  std::size_t target() const { return target_; }
  double at(Cell c) const {
    return values_[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(c.x)];
  }
  bool reachable(Cell c) const { return at(c) != kUnreachable; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FloorField&, const FloorField&) = default;

 private:
  std::size_t target_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// True if a diagonal step from `from` by `o` would squeeze past an obstacle.
bool cuts_corner(const GridEnvironment& env, Cell from, Offset o);

FloorField compute_floor_field(const GridEnvironment& env, std::size_t target);
FloorField compute_floor_field(const GridEnvironment& env, std::string_view target_label);
// One field per target, in target order. Targets are processed concurrently
// when more than one hardware thread is available.
std::vector<FloorField> compute_all_floor_fields(const GridEnvironment& env);

struct NetworkEdge {
  std::size_t from_target = 0;
  std::size_t to_target = 0;
  double length = 0.0;      // l_a, meters
  double free_speed = 0.0;  // s_a, m/s
  double free_travel_time = 0.0;

  friend bool operator==(const NetworkEdge&, const NetworkEdge&) = default;
};

// One undirected edge (from_target < to_target) per pair of targets that
// reach each other's center. The length is the mean of the two field values.
std::vector<NetworkEdge> extract_network(const GridEnvironment& env,
                                         const std::vector<FloorField>& fields);
std::vector<NetworkEdge> extract_network(const GridEnvironment& env,
                                         const std::vector<FloorField>& fields,
                                         double free_speed);

}  // namespace hybridsim
