#include "hybridsim/ca_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "hybridsim/error.hpp"

namespace hybridsim {

namespace {
constexpr double kTimeEps = 1e-9;
constexpr double kTieEps = 1e-9;
}  // namespace

void CaConfig::validate() const {
  if (!(timestep > 0.0)) throw ValidationError("timestep must be positive");
  const auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(fmt::format("{} must lie in [0,1]", name));
  };
  prob(move_probability_waiting, "move_probability_waiting");
  prob(conflict_friction, "conflict_friction");
  if (!(waiting_wander_weight >= 0.0)) throw ValidationError("waiting_wander_weight must be non-negative");
}

void GateSchedule::validate() const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!(windows[i].open < windows[i].close)) {
      throw ValidationError(fmt::format("schedule '{}': window {} must open before it closes", id, i));
    }
    if (i > 0 && windows[i].open < windows[i - 1].close) {
      throw ValidationError(fmt::format("schedule '{}': overlapping or unordered windows", id));
    }
  }
}

bool GateSchedule::is_open(double t) const {
  return std::any_of(windows.begin(), windows.end(),
                     [t](const TimeWindow& w) { return w.open <= t + kTimeEps && t < w.close - kTimeEps; });
}

std::optional<double> GateSchedule::next_opening(double t) const {
  for (const auto& w : windows) {
    if (w.open > t) return w.open;
  }
  return std::nullopt;
}

GateOutcome apply_scheduled_target(const GateSchedule& schedule, double t) {
  if (schedule.is_open(t)) return {GateDecision::Pass, t};
  if (auto next = schedule.next_opening(t)) return {GateDecision::Wait, *next};
  return {GateDecision::Stranded, 0.0};
}

double apply_delaying_target(const DelaySpec& spec, double t, Rng& rng) {
  switch (spec.distribution) {
    case DelaySpec::Distribution::Constant: return t + spec.seconds;
    case DelaySpec::Distribution::Exponential: return t + rng.exponential(spec.seconds);
  }
  return t;
}

MicroWorld::MicroWorld(const GridEnvironment& env, const std::vector<FloorField>& fields,
                       const std::map<std::string, GateSchedule>& schedules, CaConfig config)
    : env_(&env),
      fields_(&fields),
      gate_of_target_(env.targets().size(), nullptr),
      config_(config),
      occupant_(env.cell_count(), kEmpty) {
  config_.validate();
  if (fields.size() != env.targets().size()) {
    throw ValidationError(fmt::format("environment '{}': floor fields missing", env.id()));
  }
  for (std::size_t i = 0; i < env.targets().size(); ++i) {
    const auto& t = env.target(i);
    if (t.kind != TargetKind::Scheduled) continue;
    const auto it = schedules.find(t.schedule_id);
    if (it == schedules.end()) {
      throw ValidationError(fmt::format("environment '{}': target '{}' references unknown schedule '{}'",
                                        env.id(), t.label, t.schedule_id));
    }
    gate_of_target_[i] = &it->second;
  }
}

std::optional<AgentIndex> MicroWorld::occupant(Cell c) const {
  const auto slot = occupant_[env_->index(c)];
  if (slot == kEmpty) return std::nullopt;
  return agents_[slot].id;
}

const MicroAgent* MicroWorld::find(AgentIndex id) const {
  for (const auto& a : agents_) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

bool MicroWorld::gate_open(std::size_t target, double t) const {
  const auto* gate = gate_of_target_[target];
  return gate == nullptr || gate->is_open(t);
}

bool MicroWorld::may_enter(const MicroAgent& agent, Cell from, Cell c, double t) const {
  if (!env_->in_bounds(c) || env_->is_obstacle(c)) return false;
  if (cuts_corner(*env_, from, Offset{c.x - from.x, c.y - from.y})) return false;
  const auto target = env_->target_at(c);
  if (!target) return true;
  if (env_->target_at(from) == target) return true;
  if (agent.leg < agent.route.size() && agent.current_target() == *target) return gate_open(*target, t);
  return false;
}

std::optional<Cell> MicroWorld::best_free_cell(std::size_t target, std::size_t next) const {
  std::optional<Cell> best;
  double best_value = kUnreachable;
  const bool has_next = next < fields_->size();
  for (const Cell c : env_->target(target).cells) {
    if (occupied(c)) continue;
    const double v = has_next ? field(next).at(c) : 0.0;
    if (!best || v < best_value - kTieEps) {
      best = c;
      best_value = v;
    }
  }
  return best;
}

void MicroWorld::place(MicroAgent agent) {
  if (!env_->in_bounds(agent.cell) || env_->is_obstacle(agent.cell)) {
    throw ValidationError(fmt::format("cannot place agent {} on a non-walkable cell", agent.id));
  }
  if (occupied(agent.cell)) {
    throw ValidationError(fmt::format("cannot place agent {}: cell {},{} occupied", agent.id,
                                      agent.cell.x, agent.cell.y));
  }
  occupant_[env_->index(agent.cell)] = agents_.size();
  agents_.push_back(std::move(agent));
}

void MicroWorld::remove(AgentIndex id) {
  const auto it = std::find_if(agents_.begin(), agents_.end(), [id](const auto& a) { return a.id == id; });
  if (it == agents_.end()) return;
  const auto slot = static_cast<std::size_t>(it - agents_.begin());
  occupant_[env_->index(it->cell)] = kEmpty;
  if (slot + 1 != agents_.size()) {
    agents_[slot] = std::move(agents_.back());
    occupant_[env_->index(agents_[slot].cell)] = slot;
  }
  agents_.pop_back();
}

std::optional<Cell> choose_move(const MicroAgent& agent, const MicroWorld& world, Rng& rng) {
  if (agent.mode == MicroMode::Delayed || agent.mode == MicroMode::Exiting) return std::nullopt;
  if (agent.leg >= agent.route.size()) return std::nullopt;
  const auto& cfg = world.config();
  const double t = world.now();
  const FloorField& field = world.field(agent.current_target());
  const Cell here = agent.cell;

  if (agent.mode == MicroMode::WaitingForGate) {
    if (!rng.bernoulli(cfg.move_probability_waiting)) return std::nullopt;
    std::vector<std::pair<Cell, double>> options;
    double lowest = kUnreachable;
    for (const Offset o : kMooreNeighborhood) {
      const Cell n{here.x + o.dx, here.y + o.dy};
      if (!world.may_enter(agent, here, n, t) || world.occupied(n)) continue;
      const double v = field.at(n);
      if (v == kUnreachable) continue;
      options.emplace_back(n, v);
      lowest = std::min(lowest, v);
    }
    if (options.empty()) return std::nullopt;
    double total = 0.0;
    for (auto& [c, w] : options) {
      w = std::exp(-cfg.waiting_wander_weight * (w - lowest));
      total += w;
    }
    double pick = rng.uniform() * total;
    for (const auto& [c, w] : options) {
      if (pick < w) return c;
      pick -= w;
    }
    return options.back().first;
  }

  const double current = field.at(here);
  double best = kUnreachable;
  std::vector<Cell> ties;
  for (const Offset o : kMooreNeighborhood) {
    const Cell n{here.x + o.dx, here.y + o.dy};
    if (!world.may_enter(agent, here, n, t) || world.occupied(n)) continue;
    const double v = field.at(n);
    if (v == kUnreachable || !(v < current - kTieEps)) continue;
    if (v < best - kTieEps) {
      best = v;
      ties.assign(1, n);
    } else if (v <= best + kTieEps) {
      ties.push_back(n);
    }
  }
  if (ties.empty()) return std::nullopt;
  if (ties.size() == 1) return ties.front();
  return ties[rng.below(ties.size())];
}

void MicroWorld::arrive(MicroAgent& agent, double t, Rng& rng, std::vector<MicroEvent>& events) {
  const std::size_t target = agent.current_target();
  const Target& spec = env_->target(target);
  events.push_back({t, MicroEventKind::TargetReached, agent.id, agent.cell, agent.cell, target, agent.gate_wait});
  agent.gate_wait = 0.0;
  if (spec.kind == TargetKind::Scheduled) {
    events.push_back({t, MicroEventKind::GatePass, agent.id, agent.cell, agent.cell, target, 0.0});
  }
  ++agent.leg;
  if (spec.kind == TargetKind::Delaying) {
    const double until = apply_delaying_target(spec.delay, t, rng);
    if (until > t + kTimeEps) {
      agent.mode = MicroMode::Delayed;
      agent.delayed_until = until;
      events.push_back({t, MicroEventKind::DelayStart, agent.id, agent.cell, agent.cell, target, until});
      return;
    }
  }
  if (agent.leg >= agent.route.size()) {
    agent.mode = MicroMode::Exiting;
    events.push_back({t, MicroEventKind::RouteEnd, agent.id, agent.cell, agent.cell, target, 0.0});
  }
}

std::vector<MicroEvent> MicroWorld::step(double t, Rng& rng) {
  now_ = t;
  const double t_next = t + config_.timestep;
  std::vector<MicroEvent> events;
  std::vector<AgentIndex> order(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) order[i] = agents_[i].id;
  std::sort(order.begin(), order.end());
  rng.shuffle(std::span<AgentIndex>(order));

  std::unordered_map<AgentIndex, std::size_t> slot;
  slot.reserve(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) slot[agents_[i].id] = i;

  // Mode updates at time t.
  std::vector<AgentIndex> stranded;
  for (const AgentIndex id : order) {
    MicroAgent& a = agents_[slot[id]];
    if (a.mode == MicroMode::Exiting) continue;
    if (a.mode == MicroMode::Delayed) {
      if (t + kTimeEps < a.delayed_until) continue;
      if (a.leg >= a.route.size()) {
        a.mode = MicroMode::Exiting;
        events.push_back({t, MicroEventKind::RouteEnd, a.id, a.cell, a.cell, a.route.back(), 0.0});
        continue;
      }
      a.mode = MicroMode::Moving;
    }
    const std::size_t target = a.current_target();
    const GateSchedule* gate = gate_of_target_[target];
    if (gate == nullptr) continue;
    const GateOutcome outcome = apply_scheduled_target(*gate, t);
    if (outcome.decision == GateDecision::Pass) {
      if (a.mode == MicroMode::WaitingForGate) {
        a.mode = MicroMode::Moving;
        a.gate_wait += t - a.waiting_since;
      }
      continue;
    }
    if (a.mode != MicroMode::Moving) continue;
    bool at_gate = a.stalled;
    for (const Offset o : kMooreNeighborhood) {
      const Cell n{a.cell.x + o.dx, a.cell.y + o.dy};
      if (env_->in_bounds(n) && env_->target_at(n) == target) at_gate = true;
    }
    if (!at_gate) continue;
    if (outcome.decision == GateDecision::Stranded) {
      stranded.push_back(a.id);
      events.push_back({t, MicroEventKind::Stranded, a.id, a.cell, a.cell, target, 0.0});
    } else {
      a.mode = MicroMode::WaitingForGate;
      a.waiting_since = t;
      events.push_back({t, MicroEventKind::WaitStart, a.id, a.cell, a.cell, target, outcome.reopens_at});
    }
  }

  // Intentions against the occupancy at the start of the step.
  struct Intention {
    AgentIndex agent;
    Cell to;
  };
  std::vector<Intention> intentions;
  for (const AgentIndex id : order) {
    if (std::find(stranded.begin(), stranded.end(), id) != stranded.end()) continue;
    MicroAgent& a = agents_[slot[id]];
    if (a.mode != MicroMode::Moving && a.mode != MicroMode::WaitingForGate) continue;
    if (auto to = choose_move(a, *this, rng)) {
      intentions.push_back({id, *to});
    } else if (a.mode == MicroMode::Moving) {
      a.stalled = true;
    }
  }

  // Conflict resolution: contenders for one cell are resolved in permutation
  // order; with probability conflict_friction nobody moves.
  std::unordered_map<std::size_t, std::vector<std::size_t>> contenders;
  for (std::size_t i = 0; i < intentions.size(); ++i) {
    contenders[env_->index(intentions[i].to)].push_back(i);
  }
  std::vector<bool> moves(intentions.size(), false);
  for (std::size_t i = 0; i < intentions.size(); ++i) {
    const auto& group = contenders[env_->index(intentions[i].to)];
    if (group.front() != i) continue;
    if (group.size() == 1) {
      moves[i] = true;
    } else if (!rng.bernoulli(config_.conflict_friction)) {
      moves[i] = true;
    }
  }

  for (std::size_t i = 0; i < intentions.size(); ++i) {
    MicroAgent& a = agents_[slot[intentions[i].agent]];
    if (!moves[i]) {
      if (a.mode == MicroMode::Moving) a.stalled = true;
      continue;
    }
    const Cell from = a.cell;
    occupant_[env_->index(from)] = kEmpty;
    a.cell = intentions[i].to;
    occupant_[env_->index(a.cell)] = slot[a.id];
    a.stalled = false;
    events.push_back({t_next, MicroEventKind::Move, a.id, from, a.cell, 0, 0.0});
    if (env_->target_at(a.cell) == a.current_target()) {
      if (a.mode == MicroMode::WaitingForGate) {
        a.mode = MicroMode::Moving;
        a.gate_wait += t - a.waiting_since;
      }
      arrive(a, t_next, rng, events);
    }
  }

  for (const AgentIndex id : stranded) remove(id);
  return events;
}

}  // namespace hybridsim
