#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridsim/environment.hpp"
#include "hybridsim/rng.hpp"

namespace hybridsim {

using AgentIndex = std::size_t;

struct CaConfig {
  double timestep = kCellSide / kDefaultFreeSpeed;  // one cell per step at 1.34 m/s
  double move_probability_waiting = 0.3;
  double waiting_wander_weight = 0.5;
  std::uint64_t rng_seed = 1;
  double conflict_friction = 0.1;

  void validate() const;
};

struct TimeWindow {
  double open = 0.0;
  double close = 0.0;
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct GateSchedule {
  std::string id;
  std::vector<TimeWindow> windows;  // ascending, disjoint, open < close

  void validate() const;
  bool is_open(double t) const;
  // Start of the first window opening after t, if any.
  std::optional<double> next_opening(double t) const;
  friend bool operator==(const GateSchedule&, const GateSchedule&) = default;
};

enum class MicroMode { Moving, Delayed, WaitingForGate, Exiting };

struct MicroAgent {
  AgentIndex id = 0;
  Cell cell;
  MicroMode mode = MicroMode::Moving;
  double delayed_until = 0.0;
  // Targets still to visit inside this environment; route[leg] is current.
  std::vector<std::size_t> route;
  std::size_t leg = 0;
  double entered_env_at = 0.0;
  // Seconds spent in WaitingForGate since the last target arrival.
  double gate_wait = 0.0;
  double waiting_since = 0.0;
  bool stalled = false;

  std::size_t current_target() const { return route[leg]; }
};

enum class MicroEventKind { Move, TargetReached, DelayStart, WaitStart, GatePass, RouteEnd, Stranded };

struct MicroEvent {
  double time = 0.0;
  MicroEventKind kind = MicroEventKind::Move;
  AgentIndex agent = 0;
  Cell from;
  Cell to;
  std::size_t target = 0;
  // DelayStart: release time. TargetReached: gate wait accrued on the leg.
  double value = 0.0;
};

// Gate decision for an agent at (or next to) a scheduled target.
enum class GateDecision { Pass, Wait, Stranded };
struct GateOutcome {
  GateDecision decision = GateDecision::Pass;
  double reopens_at = 0.0;  // valid for Wait
};
GateOutcome apply_scheduled_target(const GateSchedule& schedule, double t);

// Release time for an agent that reaches a delaying target at time t.
double apply_delaying_target(const DelaySpec& spec, double t, Rng& rng);

class MicroWorld;

// Next cell for an agent, or nullopt to stay. Moving agents descend the
// field of their current target greedily (strictly decreasing values, ties
// broken uniformly). Waiting agents move with probability
// move_probability_waiting to a neighbor drawn with weight
// exp(-waiting_wander_weight * value).
std::optional<Cell> choose_move(const MicroAgent& agent, const MicroWorld& world, Rng& rng);

// One microscopic environment in motion: occupancy, agents and gate state.
class MicroWorld {
 public:
  // `fields` must be the floor fields of `env`, in target order. `schedules`
  // maps schedule ids to schedules; every scheduled target must resolve.
  MicroWorld(const GridEnvironment& env, const std::vector<FloorField>& fields,
             const std::map<std::string, GateSchedule>& schedules, CaConfig config);

  const GridEnvironment& environment() const { return *env_; }
  const FloorField& field(std::size_t target) const { return (*fields_)[target]; }
  const CaConfig& config() const { return config_; }

  bool occupied(Cell c) const { return occupant_[env_->index(c)] != kEmpty; }
  std::optional<AgentIndex> occupant(Cell c) const;
  std::size_t agent_count() const { return agents_.size(); }
  const std::vector<MicroAgent>& agents() const { return agents_; }
  const MicroAgent* find(AgentIndex id) const;

  // Whether a gate target admits agents at time t (non-scheduled: always).
  bool gate_open(std::size_t target, double t) const;
  // Whether `agent` may step onto `c` at time t (walkable, not an unplanned
  // target, not a closed gate, no corner cut). Occupancy is not checked.
  bool may_enter(const MicroAgent& agent, Cell from, Cell c, double t) const;

  // Free cell of `target` with the lowest value on the field of `next`, ties
  // in row-major order.
  std::optional<Cell> best_free_cell(std::size_t target, std::size_t next) const;

  // Puts an agent on a free cell. Throws if the cell is occupied.
  void place(MicroAgent agent);
  // Removes an agent (exit to a meso link, arrival, stranding).
  void remove(AgentIndex id);

  // Advances all agents by one timestep starting at time t. Moves and target
  // arrivals are stamped t + timestep; mode changes at t.
  std::vector<MicroEvent> step(double t, Rng& rng);

  double now() const { return now_; }

 private:
  static constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);

  void arrive(MicroAgent& agent, double t, Rng& rng, std::vector<MicroEvent>& events);

  const GridEnvironment* env_;
  const std::vector<FloorField>* fields_;
  std::vector<const GateSchedule*> gate_of_target_;
  CaConfig config_;
  std::vector<MicroAgent> agents_;
  std::vector<std::size_t> occupant_;  // cell -> position in agents_
  double now_ = 0.0;
};

}  // namespace hybridsim
