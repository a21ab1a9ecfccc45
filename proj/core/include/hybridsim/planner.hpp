#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hybridsim/global_graph.hpp"
#include "hybridsim/multiscale.hpp"
#include "hybridsim/plan.hpp"
#include "hybridsim/scenario.hpp"

namespace hybridsim {

// Minimal-cost path; equal costs resolve to the lexicographically smaller
// node sequence. Throws ValidationError when the destination is unreachable.
Plan shortest_path(const GlobalGraph& graph, std::size_t origin, std::size_t destination,
                   const std::vector<double>& edge_costs);

// Nash: sum of experienced edge times. SystemOptimum: plus external costs.
double score_plan(std::span<const TravelRecord> records, RelaxMode mode);
// Score of an agent that did not reach its destination.
double stranded_penalty(double departure, double sim_end);

// Per-edge mean experienced time (plus mean external cost in SystemOptimum
// mode); unused edges fall back to their free travel time.
std::vector<double> experienced_edge_costs(const GlobalGraph& graph, const std::vector<TravelRecord>& records,
                                           RelaxMode mode);

// Largest (max route mean - min route mean) / min route mean over OD pairs,
// where routes are the distinct node sequences in use.
double relative_gap(const std::vector<Plan>& plans, const std::vector<double>& travel_times);

struct RelaxationConfig {
  RelaxMode mode = RelaxMode::NashEquilibrium;
  int iterations = 1;
  double replan_fraction = 0.1;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct IterationSummary {
  int iteration = 0;
  RelaxMode mode = RelaxMode::NashEquilibrium;
  double avg_score = 0.0;
  double max_score = 0.0;
  double relative_gap = 0.0;
  double avg_travel_time = 0.0;
  std::size_t replanned = 0;
  std::vector<double> edge_costs;  // experienced costs fed to the next iteration
};

struct RelaxationResult {
  std::vector<IterationSummary> history;
  std::vector<Plan> plans;  // plans executed in the last iteration, scored
  SimulationResult last;
};

// Plan on free travel times, then repeatedly simulate, score, and let a
// seeded random fraction of agents best-respond to the previous iteration's
// experienced edge costs.
RelaxationResult relax(const Scenario& scenario, const RelaxationConfig& config,
                       const std::function<void(const IterationSummary&)>& on_iteration = {});

RelaxationConfig relaxation_config(const Scenario& scenario);

std::string write_history(const std::vector<IterationSummary>& history);

}  // namespace hybridsim
