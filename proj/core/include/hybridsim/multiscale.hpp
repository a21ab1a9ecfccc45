#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "hybridsim/ca_engine.hpp"
#include "hybridsim/congestion.hpp"
#include "hybridsim/event_log.hpp"
#include "hybridsim/global_graph.hpp"
#include "hybridsim/meso_queue.hpp"
#include "hybridsim/plan.hpp"
#include "hybridsim/scenario.hpp"

namespace hybridsim {

struct TravelRecord {
  AgentIndex agent = 0;
  std::size_t edge = 0;
  double enter = 0.0;
  double exit = 0.0;
  double gate_wait = 0.0;  // excluded from congestion detection
  double external_cost = 0.0;
  bool unrelieved = false;  // external cost priced against the end of the run
};

enum class AgentStatus { NotDeparted, OnMicro, InMeso, WaitingAtNode, Arrived, Stranded };

struct AgentOutcome {
  AgentStatus status = AgentStatus::NotDeparted;
  double departure = 0.0;
  double arrival = 0.0;  // valid when Arrived
};

struct Census {
  std::size_t not_departed = 0;
  std::size_t on_micro = 0;
  std::size_t in_meso = 0;
  std::size_t waiting_at_node = 0;
  std::size_t arrived = 0;
  std::size_t stranded = 0;

  std::size_t total() const {
    return not_departed + on_micro + in_meso + waiting_at_node + arrived + stranded;
  }
};

struct SimulationOptions {
  bool trace_moves = false;
  // Called after every global step with the time reached.
  std::function<void(double, const std::vector<MicroWorld>&)> observer;
};

struct SimulationResult {
  EventLog log;
  std::vector<TravelRecord> records;
  std::vector<AgentOutcome> outcomes;
  std::vector<CongestionTransition> transitions;
  double end_time = 0.0;
  std::size_t arrived = 0;
  std::size_t stranded = 0;
};

// Runs one day of the coupled model with fixed plans (one per demand entry,
// in demand order). The global timestep is the CA timestep; meso links
// advance in ascending link-id order before the environments step.
class Simulation {
 public:
  Simulation(const Scenario& scenario, std::vector<Plan> plans, SimulationOptions options = {});

  bool finished() const;
  double now() const { return t_; }
  void step();
  Census census() const;
  const std::vector<MicroWorld>& worlds() const { return worlds_; }
  const std::vector<MesoLink>& links() const { return links_; }
  const CongestionTracker& congestion() const { return congestion_; }

  // Steps until every agent has arrived or stranded, or sim_end is reached,
  // then prices unrelieved congestion against the end time.
  SimulationResult run();

 private:
  struct AgentState {
    AgentStatus status = AgentStatus::NotDeparted;
    std::size_t pos = 0;      // index of the edge being traversed or next to take
    double node_time = 0.0;   // time the current node was reached
    bool holds_cell = false;  // waiting at a node while standing on a micro cell
    std::size_t env = 0;
  };

  void depart(double t);
  void advance_links(double t, double dt);
  void process_node_queues(double t);
  void step_worlds(double t);

  bool start_edge(AgentIndex a, double t);
  void finish_edge(AgentIndex a, double t, double gate_wait);
  void arrive(AgentIndex a, double t);
  void log_enter(AgentIndex a, double t);
  std::vector<std::size_t> micro_route(AgentIndex a) const;
  const std::string& name(AgentIndex a) const;

  const Scenario* scenario_;
  std::vector<Plan> plans_;
  SimulationOptions options_;
  std::vector<MesoLink> links_;
  std::vector<std::size_t> link_order_;
  std::vector<MicroWorld> worlds_;
  std::vector<Rng> world_rngs_;
  std::vector<AgentState> agents_;
  std::vector<AgentIndex> departure_order_;
  std::size_t next_departure_ = 0;
  std::vector<std::deque<AgentIndex>> node_queues_;
  CongestionTracker congestion_;
  SimulationResult result_;
  std::size_t done_ = 0;
  std::uint64_t step_index_ = 0;
  double t_ = 0.0;
};

// Free-flow shortest-path plans for the whole demand.
std::vector<Plan> initial_plans(const Scenario& scenario);

SimulationResult simulate(const Scenario& scenario, std::vector<Plan> plans, SimulationOptions options = {});
SimulationResult simulate(const Scenario& scenario, SimulationOptions options = {});

// Log records describing the measurement segments, written at time 0.
void append_segment_records(EventLog& log, const std::vector<SegmentDefinition>& segments);

}  // namespace hybridsim
