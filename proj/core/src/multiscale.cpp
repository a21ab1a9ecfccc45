#include "hybridsim/multiscale.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "hybridsim/planner.hpp"

namespace hybridsim {

namespace {
constexpr double kTimeEps = 1e-9;

std::string join_nodes(const std::vector<std::string>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) out += '|';
    out += nodes[i];
  }
  return out;
}
}  // namespace

void append_segment_records(EventLog& log, const std::vector<SegmentDefinition>& segments) {
  for (const auto& s : segments) {
    log.append(0.0, event_kind::kSegment, "", s.label,
               fmt::format("group={};from={};to={};cycle={};role={}", s.group, join_nodes(s.from_nodes),
                           join_nodes(s.to_nodes), s.cycle, s.role));
  }
}

Simulation::Simulation(const Scenario& scenario, std::vector<Plan> plans, SimulationOptions options)
    : scenario_(&scenario),
      plans_(std::move(plans)),
      options_(std::move(options)),
      links_(scenario.links),
      congestion_({}, scenario.ca.timestep) {
  const auto& graph = scenario.graph;
  if (plans_.size() != scenario.demand.size()) {
    throw ValidationError(fmt::format("expected {} plans, got {}", scenario.demand.size(), plans_.size()));
  }
  for (std::size_t a = 0; a < plans_.size(); ++a) {
    const auto& d = scenario.demand[a];
    const auto o = graph.node_index(d.origin);
    const auto t = graph.node_index(d.destination);
    if (!o || !t || !plan_is_valid(graph, plans_[a], *o, *t)) {
      throw ValidationError(fmt::format("plan of agent '{}' is corrupt", d.agent_id));
    }
    plans_[a].departure = d.departure;
  }

  link_order_.resize(links_.size());
  std::iota(link_order_.begin(), link_order_.end(), std::size_t{0});
  std::sort(link_order_.begin(), link_order_.end(),
            [this](std::size_t a, std::size_t b) { return links_[a].id() < links_[b].id(); });

  worlds_.reserve(scenario.environments.size());
  for (std::size_t e = 0; e < scenario.environments.size(); ++e) {
    worlds_.emplace_back(scenario.environments[e], scenario.floor_fields[e], scenario.schedules, scenario.ca);
    world_rngs_.emplace_back(mix_seed(scenario.ca.rng_seed, e));
  }

  agents_.resize(plans_.size());
  departure_order_.resize(plans_.size());
  std::iota(departure_order_.begin(), departure_order_.end(), AgentIndex{0});
  std::stable_sort(departure_order_.begin(), departure_order_.end(), [&scenario](AgentIndex a, AgentIndex b) {
    return scenario.demand[a].departure < scenario.demand[b].departure;
  });
  node_queues_.resize(graph.node_count());

  std::vector<double> references;
  references.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) references.push_back(e.congestion_reference);
  congestion_ = CongestionTracker(std::move(references), scenario.ca.timestep);

  result_.outcomes.resize(plans_.size());
  for (std::size_t a = 0; a < plans_.size(); ++a) result_.outcomes[a].departure = scenario.demand[a].departure;
  append_segment_records(result_.log, scenario.segments);
}

const std::string& Simulation::name(AgentIndex a) const { return scenario_->demand[a].agent_id; }

bool Simulation::finished() const {
  return done_ == agents_.size() || t_ >= scenario_->sim_end - kTimeEps;
}

void Simulation::step() {
  const double dt = scenario_->ca.timestep;
  const double t = t_;
  depart(t);
  advance_links(t, dt);
  process_node_queues(t);
  step_worlds(t);
  t_ = static_cast<double>(++step_index_) * dt;
  if (options_.observer) options_.observer(t_, worlds_);
}

void Simulation::depart(double t) {
  while (next_departure_ < departure_order_.size()) {
    const AgentIndex a = departure_order_[next_departure_];
    const auto& d = scenario_->demand[a];
    if (d.departure > t + kTimeEps) break;
    ++next_departure_;
    auto& s = agents_[a];
    s.node_time = d.departure;
    result_.log.append(d.departure, event_kind::kDepart, name(a), d.origin,
                       fmt::format("group={};destination={}", d.group, d.destination));
    if (plans_[a].edges.empty()) {
      arrive(a, d.departure);
      continue;
    }
    s.status = AgentStatus::WaitingAtNode;
    node_queues_[plans_[a].nodes.front()].push_back(a);
  }
}

void Simulation::log_enter(AgentIndex a, double t) {
  const auto& s = agents_[a];
  result_.log.append(t, event_kind::kEnter, name(a), scenario_->graph.edge(plans_[a].edges[s.pos]).id);
}

void Simulation::finish_edge(AgentIndex a, double t, double gate_wait) {
  auto& s = agents_[a];
  const auto& graph = scenario_->graph;
  const std::size_t edge = plans_[a].edges[s.pos];
  const std::size_t record = result_.records.size();
  TravelRecord r{a, edge, s.node_time, t, gate_wait, 0.0, false};
  result_.records.push_back(r);
  const double observed = r.exit - r.enter - r.gate_wait;
  result_.log.append(t, event_kind::kLeave, name(a), graph.edge(edge).id, fmt::format("tt={:.4f};wait={:.4f}", r.exit - r.enter, r.gate_wait));
  const auto update = congestion_.on_exit(edge, observed, t, record);
  if (update.transition) {
    result_.log.append(t,
                       update.transition->to == LinkState::Congested ? event_kind::kCongested
                                                                      : event_kind::kRelieved,
                       "", graph.edge(edge).id);
  }
  for (const auto& c : update.costs) {
    auto& rec = result_.records[c.record];
    rec.external_cost = c.cost;
    result_.log.append(t, event_kind::kExternalCost, name(rec.agent), graph.edge(rec.edge).id,
                       fmt::format("exit={:.4f};cost={:.4f}", c.exit, c.cost));
  }
  ++s.pos;
  s.node_time = t;
  result_.log.append(t, event_kind::kNode, name(a), graph.node_id(plans_[a].nodes[s.pos]));
}

void Simulation::arrive(AgentIndex a, double t) {
  auto& s = agents_[a];
  s.status = AgentStatus::Arrived;
  result_.outcomes[a].arrival = t;
  ++result_.arrived;
  ++done_;
  result_.log.append(t, event_kind::kArrive, name(a), scenario_->demand[a].destination,
                     fmt::format("tt={:.4f}", t - scenario_->demand[a].departure));
}

std::vector<std::size_t> Simulation::micro_route(AgentIndex a) const {
  const auto& graph = scenario_->graph;
  const auto& edges = plans_[a].edges;
  std::vector<std::size_t> route;
  const std::size_t env = graph.edge(edges[agents_[a].pos]).env;
  for (std::size_t i = agents_[a].pos; i < edges.size(); ++i) {
    const auto& e = graph.edge(edges[i]);
    if (e.kind != EdgeKind::Micro || e.env != env) break;
    route.push_back(e.to_target);
  }
  return route;
}

bool Simulation::start_edge(AgentIndex a, double t) {
  auto& s = agents_[a];
  const auto& e = scenario_->graph.edge(plans_[a].edges[s.pos]);
  if (e.kind == EdgeKind::Meso) {
    if (!links_[e.link].try_enter(a, t)) return false;
    if (s.holds_cell) {
      worlds_[s.env].remove(a);
      s.holds_cell = false;
    }
    s.status = AgentStatus::InMeso;
    log_enter(a, t);
    return true;
  }
  if (s.holds_cell) {
    throw ValidationError(fmt::format("plan of agent '{}' is corrupt", name(a)));
  }
  auto& world = worlds_[e.env];
  const auto cell = world.best_free_cell(e.from_target, e.to_target);
  if (!cell) return false;
  MicroAgent m;
  m.id = a;
  m.cell = *cell;
  m.route = micro_route(a);
  m.entered_env_at = t;
  world.place(std::move(m));
  s.env = e.env;
  s.status = AgentStatus::OnMicro;
  log_enter(a, t);
  return true;
}

void Simulation::advance_links(double t, double dt) {
  const auto& graph = scenario_->graph;
  for (const std::size_t l : link_order_) {
    links_[l].advance(t, dt, [&](AgentIndex a) {
      auto& s = agents_[a];
      const auto& edges = plans_[a].edges;
      if (s.pos + 1 == edges.size()) {
        finish_edge(a, t, 0.0);
        arrive(a, t);
        return true;
      }
      const auto& next = graph.edge(edges[s.pos + 1]);
      if (next.kind == EdgeKind::Meso) {
        if (!links_[next.link].try_enter(a, t)) return false;
        finish_edge(a, t, 0.0);
        log_enter(a, t);
        return true;
      }
      finish_edge(a, t, 0.0);
      s.status = AgentStatus::WaitingAtNode;
      node_queues_[plans_[a].nodes[s.pos]].push_back(a);
      return true;
    });
  }
}

void Simulation::process_node_queues(double t) {
  for (auto& queue : node_queues_) {
    if (queue.empty()) continue;
    std::vector<std::size_t> blocked;
    std::deque<AgentIndex> kept;
    for (const AgentIndex a : queue) {
      const std::size_t edge = plans_[a].edges[agents_[a].pos];
      if (std::find(blocked.begin(), blocked.end(), edge) != blocked.end() || !start_edge(a, t)) {
        if (std::find(blocked.begin(), blocked.end(), edge) == blocked.end()) blocked.push_back(edge);
        kept.push_back(a);
      }
    }
    queue.swap(kept);
  }
}

void Simulation::step_worlds(double t) {
  struct Tagged {
    MicroEvent event;
    std::size_t env;
  };
  std::vector<Tagged> events;
  for (std::size_t e = 0; e < worlds_.size(); ++e) {
    if (worlds_[e].agent_count() == 0) continue;
    for (auto& ev : worlds_[e].step(t, world_rngs_[e])) events.push_back({ev, e});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Tagged& a, const Tagged& b) { return a.event.time < b.event.time; });

  const auto& graph = scenario_->graph;
  for (const auto& [ev, env_index] : events) {
    const AgentIndex a = ev.agent;
    auto& s = agents_[a];
    const auto& env = scenario_->environments[env_index];
    switch (ev.kind) {
      case MicroEventKind::Move:
        if (options_.trace_moves) {
          result_.log.append(ev.time, event_kind::kMove, name(a), env.id(),
                             fmt::format("from={}:{};to={}:{}", ev.from.x, ev.from.y, ev.to.x, ev.to.y));
        }
        break;
      case MicroEventKind::TargetReached: {
        const auto& e = graph.edge(plans_[a].edges[s.pos]);
        if (e.kind != EdgeKind::Micro || e.env != env_index || e.to_target != ev.target) {
          throw ValidationError(fmt::format("plan of agent '{}' is corrupt", name(a)));
        }
        finish_edge(a, ev.time, ev.value);
        if (s.pos < plans_[a].edges.size()) {
          const auto& next = graph.edge(plans_[a].edges[s.pos]);
          if (next.kind == EdgeKind::Micro && next.env == env_index) log_enter(a, ev.time);
        }
        break;
      }
      case MicroEventKind::DelayStart:
        result_.log.append(ev.time, event_kind::kDelay, name(a), env.target(ev.target).node_id,
                           fmt::format("until={:.4f}", ev.value));
        break;
      case MicroEventKind::WaitStart:
        result_.log.append(ev.time, event_kind::kWait, name(a), env.target(ev.target).node_id,
                           fmt::format("reopens={:.4f}", ev.value));
        break;
      case MicroEventKind::GatePass:
        result_.log.append(ev.time, event_kind::kBoard, name(a), env.target(ev.target).node_id);
        break;
      case MicroEventKind::RouteEnd:
        if (s.pos == plans_[a].edges.size()) {
          worlds_[env_index].remove(a);
          arrive(a, ev.time);
        } else {
          s.holds_cell = true;
          s.status = AgentStatus::WaitingAtNode;
          node_queues_[plans_[a].nodes[s.pos]].push_back(a);
        }
        break;
      case MicroEventKind::Stranded:
        s.status = AgentStatus::Stranded;
        ++result_.stranded;
        ++done_;
        result_.log.append(ev.time, event_kind::kStranded, name(a), env.target(ev.target).node_id);
        break;
    }
  }
}

Census Simulation::census() const {
  Census c;
  for (const auto& s : agents_) {
    switch (s.status) {
      case AgentStatus::NotDeparted: ++c.not_departed; break;
      case AgentStatus::OnMicro: ++c.on_micro; break;
      case AgentStatus::InMeso: ++c.in_meso; break;
      case AgentStatus::WaitingAtNode: ++c.waiting_at_node; break;
      case AgentStatus::Arrived: ++c.arrived; break;
      case AgentStatus::Stranded: ++c.stranded; break;
    }
  }
  return c;
}

SimulationResult Simulation::run() {
  while (!finished()) step();
  result_.end_time = t_;
  const auto& graph = scenario_->graph;
  for (const auto& c : congestion_.finish(t_)) {
    auto& rec = result_.records[c.record];
    rec.external_cost = c.cost;
    rec.unrelieved = true;
    result_.log.append(t_, event_kind::kExternalCost, name(rec.agent), graph.edge(rec.edge).id,
                       fmt::format("exit={:.4f};cost={:.4f};unrelieved=1", c.exit, c.cost));
  }
  result_.transitions = congestion_.transitions();
  for (std::size_t a = 0; a < agents_.size(); ++a) result_.outcomes[a].status = agents_[a].status;
  return std::move(result_);
}

std::vector<Plan> initial_plans(const Scenario& scenario) {
  const auto& graph = scenario.graph;
  const auto costs = graph.free_travel_times();
  std::map<std::pair<std::size_t, std::size_t>, Plan> cache;
  std::vector<Plan> plans;
  plans.reserve(scenario.demand.size());
  for (const auto& d : scenario.demand) {
    const auto o = graph.node_index(d.origin);
    const auto t = graph.node_index(d.destination);
    if (!o || !t) throw ValidationError(fmt::format("demand of agent '{}' references an unknown node", d.agent_id));
    auto it = cache.find({*o, *t});
    if (it == cache.end()) it = cache.emplace(std::pair{*o, *t}, shortest_path(graph, *o, *t, costs)).first;
    Plan p = it->second;
    p.departure = d.departure;
    plans.push_back(std::move(p));
  }
  return plans;
}

SimulationResult simulate(const Scenario& scenario, std::vector<Plan> plans, SimulationOptions options) {
  Simulation sim(scenario, std::move(plans), std::move(options));
  return sim.run();
}

SimulationResult simulate(const Scenario& scenario, SimulationOptions options) {
  return simulate(scenario, initial_plans(scenario), std::move(options));
}

}  // namespace hybridsim
