#include "hybridsim/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <tuple>

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "hybridsim/rng.hpp"

namespace hybridsim {

namespace {
constexpr double kCostEps = 1e-9;
constexpr std::uint64_t kReplanStream = 0x5E1EC7ULL;
}  // namespace

std::string_view to_string(RelaxMode mode) {
  return mode == RelaxMode::NashEquilibrium ? "nash" : "so";
}

RelaxMode parse_relax_mode(std::string_view text) {
  if (text == "nash" || text == "NashEquilibrium") return RelaxMode::NashEquilibrium;
  if (text == "so" || text == "SystemOptimum") return RelaxMode::SystemOptimum;
  throw ValidationError(fmt::format("unknown relaxation mode '{}'", text));
}

bool plan_is_valid(const GlobalGraph& graph, const Plan& plan, std::size_t origin, std::size_t destination) {
  if (plan.nodes.empty() || plan.nodes.front() != origin || plan.nodes.back() != destination) return false;
  if (plan.edges.size() + 1 != plan.nodes.size()) return false;
  for (std::size_t i = 0; i < plan.edges.size(); ++i) {
    if (plan.edges[i] >= graph.edges().size()) return false;
    const auto& e = graph.edge(plan.edges[i]);
    if (e.from != plan.nodes[i] || e.to != plan.nodes[i + 1]) return false;
  }
  return true;
}

Plan shortest_path(const GlobalGraph& graph, std::size_t origin, std::size_t destination,
                   const std::vector<double>& edge_costs) {
  const std::size_t n = graph.node_count();
  if (origin >= n || destination >= n) throw ValidationError("shortest path: unknown node");
  if (edge_costs.size() != graph.edges().size()) throw ValidationError("shortest path: cost vector size mismatch");
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::vector<std::size_t>> path(n);
  std::vector<std::vector<std::size_t>> via(n);
  std::vector<bool> settled(n, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[origin] = 0.0;
  path[origin] = {origin};
  open.push({0.0, origin});
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (settled[u] || d > dist[u] + kCostEps) continue;
    settled[u] = true;
    if (u == destination) break;
    for (const std::size_t e : graph.out_edges(u)) {
      const std::size_t v = graph.edge(e).to;
      if (settled[v]) continue;
      const double cost = edge_costs[e];
      if (!(cost >= 0.0)) throw ValidationError("shortest path: negative edge cost");
      const double nd = d + cost;
      auto candidate = path[u];
      candidate.push_back(v);
      auto candidate_edges = via[u];
      candidate_edges.push_back(e);
      bool better = nd < dist[v] - kCostEps;
      if (!better && std::abs(nd - dist[v]) <= kCostEps) {
        better = std::tie(candidate, candidate_edges) < std::tie(path[v], via[v]);
      }
      if (better) {
        dist[v] = nd;
        path[v] = std::move(candidate);
        via[v] = std::move(candidate_edges);
        open.push({nd, v});
      }
    }
  }
  if (!settled[destination]) {
    throw ValidationError(fmt::format("'{}' is unreachable from '{}'", graph.node_id(destination),
                                      graph.node_id(origin)));
  }
  Plan plan;
  plan.nodes = path[destination];
  plan.edges = via[destination];
  plan.score = dist[destination];
  return plan;
}

double score_plan(std::span<const TravelRecord> records, RelaxMode mode) {
  double score = 0.0;
  for (const auto& r : records) {
    score += r.exit - r.enter;
    if (mode == RelaxMode::SystemOptimum) score += r.external_cost;
  }
  return score;
}

double stranded_penalty(double departure, double sim_end) { return std::max(0.0, sim_end - departure); }

std::vector<double> experienced_edge_costs(const GlobalGraph& graph, const std::vector<TravelRecord>& records,
                                           RelaxMode mode) {
  std::vector<double> sum(graph.edges().size(), 0.0);
  std::vector<std::size_t> count(graph.edges().size(), 0);
  for (const auto& r : records) {
    sum[r.edge] += r.exit - r.enter;
    if (mode == RelaxMode::SystemOptimum) sum[r.edge] += r.external_cost;
    ++count[r.edge];
  }
  auto costs = graph.free_travel_times();
  for (std::size_t e = 0; e < costs.size(); ++e) {
    if (count[e] > 0) costs[e] = sum[e] / static_cast<double>(count[e]);
  }
  return costs;
}

double relative_gap(const std::vector<Plan>& plans, const std::vector<double>& travel_times) {
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::vector<std::size_t>, std::pair<double, std::size_t>>>
      routes;
  for (std::size_t a = 0; a < plans.size(); ++a) {
    const auto& p = plans[a];
    auto& slot = routes[{p.nodes.front(), p.nodes.back()}][p.nodes];
    slot.first += travel_times[a];
    ++slot.second;
  }
  double gap = 0.0;
  for (const auto& [od, by_route] : routes) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [nodes, acc] : by_route) {
      const double mean = acc.first / static_cast<double>(acc.second);
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    if (lo > 0.0) gap = std::max(gap, (hi - lo) / lo);
  }
  return gap;
}

void RelaxationConfig::validate() const {
  if (iterations < 1) throw ValidationError("iterations must be at least 1");
  if (!(replan_fraction >= 0.0 && replan_fraction <= 1.0)) {
    throw ValidationError("replan_fraction must lie in [0,1]");
  }
}

RelaxationConfig relaxation_config(const Scenario& scenario) {
  return {scenario.mode, scenario.iterations, scenario.replan_fraction, scenario.seed};
}

RelaxationResult relax(const Scenario& scenario, const RelaxationConfig& config,
                       const std::function<void(const IterationSummary&)>& on_iteration) {
  config.validate();
  const auto& graph = scenario.graph;
  RelaxationResult out;
  std::vector<Plan> plans = initial_plans(scenario);
  std::vector<std::pair<std::size_t, std::size_t>> od;
  od.reserve(plans.size());
  for (const auto& p : plans) od.emplace_back(p.nodes.front(), p.nodes.back());

  for (int it = 1; it <= config.iterations; ++it) {
    SimulationResult sim = simulate(scenario, plans);

    std::vector<std::vector<TravelRecord>> per_agent(plans.size());
    for (const auto& r : sim.records) per_agent[r.agent].push_back(r);
    IterationSummary summary;
    summary.iteration = it;
    summary.mode = config.mode;
    std::vector<double> travel(plans.size(), 0.0);
    double score_sum = 0.0;
    double travel_sum = 0.0;
    for (std::size_t a = 0; a < plans.size(); ++a) {
      const auto& outcome = sim.outcomes[a];
      if (outcome.status == AgentStatus::Arrived) {
        plans[a].score = score_plan(per_agent[a], config.mode);
        travel[a] = outcome.arrival - outcome.departure;
      } else {
        plans[a].score = stranded_penalty(outcome.departure, scenario.sim_end);
        travel[a] = plans[a].score;
      }
      score_sum += plans[a].score;
      travel_sum += travel[a];
      summary.max_score = std::max(summary.max_score, plans[a].score);
    }
    if (!plans.empty()) {
      summary.avg_score = score_sum / static_cast<double>(plans.size());
      summary.avg_travel_time = travel_sum / static_cast<double>(plans.size());
    }
    summary.relative_gap = relative_gap(plans, travel);
    summary.edge_costs = experienced_edge_costs(graph, sim.records, config.mode);

    if (it == config.iterations) {
      out.last = std::move(sim);
      out.plans = plans;
    } else {
      Rng rng(mix_seed(config.rng_seed ^ kReplanStream, static_cast<std::uint64_t>(it)));
      std::map<std::pair<std::size_t, std::size_t>, Plan> best;
      for (std::size_t a = 0; a < plans.size(); ++a) {
        if (!rng.bernoulli(config.replan_fraction)) continue;
        auto found = best.find(od[a]);
        if (found == best.end()) {
          found = best.emplace(od[a], shortest_path(graph, od[a].first, od[a].second, summary.edge_costs)).first;
        }
        plans[a].nodes = found->second.nodes;
        plans[a].edges = found->second.edges;
        ++summary.replanned;
      }
    }
    if (on_iteration) on_iteration(summary);
    out.history.push_back(std::move(summary));
  }
  return out;
}

std::string write_history(const std::vector<IterationSummary>& history) {
  std::string out = "iteration,mode,avg_score_s,max_score_s,relative_gap\n";
  for (const auto& h : history) {
    out += fmt::format("{},{},{:.4f},{:.4f},{:.6f}\n", h.iteration, to_string(h.mode), h.avg_score, h.max_score,
                       h.relative_gap);
  }
  return out;
}

}  // namespace hybridsim
