#include "hybridsim/global_graph.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "hybridsim/error.hpp"

namespace hybridsim {

GlobalGraph::GlobalGraph(std::vector<std::string> node_ids, std::vector<GraphEdge> edges,
                         std::map<std::string, NodeBinding> bindings)
    : nodes_(std::move(node_ids)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  out_.resize(nodes_.size());
  bindings_.resize(nodes_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].from >= nodes_.size() || edges_[e].to >= nodes_.size()) {
      throw ValidationError(fmt::format("edge '{}' references an unknown node", edges_[e].id));
    }
    out_[edges_[e].from].push_back(e);
  }
  for (const auto& [node, binding] : bindings) {
    if (auto idx = node_index(node)) bindings_[*idx] = binding;
  }
}

std::optional<std::size_t> GlobalGraph::node_index(std::string_view id) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::optional<std::size_t> GlobalGraph::find_edge(std::string_view id) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].id == id) return e;
  }
  return std::nullopt;
}

std::optional<NodeBinding> GlobalGraph::binding(std::size_t node) const { return bindings_.at(node); }

std::vector<double> GlobalGraph::free_travel_times() const {
  std::vector<double> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back(e.free_travel_time);
  return out;
}

bool GlobalGraph::reachable(std::size_t from, std::size_t to) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (n == to) return true;
    for (const auto e : out_[n]) {
      const auto next = edges_[e].to;
      if (!seen[next]) {
        seen[next] = true;
        stack.push_back(next);
      }
    }
  }
  return false;
}

std::string micro_edge_id(const GridEnvironment& env, std::size_t from_target, std::size_t to_target) {
  return fmt::format("{}:{}-{}", env.id(), env.target(from_target).label, env.target(to_target).label);
}

GlobalGraph build_global_graph(const std::vector<GridEnvironment>& environments,
                               const std::vector<std::vector<FloorField>>& fields,
                               const std::vector<MesoLink>& links) {
  if (fields.size() != environments.size()) {
    throw ValidationError("floor fields missing for some environments");
  }
  std::set<std::string> node_set;
  std::map<std::string, NodeBinding> bindings;
  std::set<std::string> env_ids;
  for (std::size_t e = 0; e < environments.size(); ++e) {
    const auto& env = environments[e];
    if (!env_ids.insert(env.id()).second) {
      throw ValidationError(fmt::format("duplicate environment id '{}'", env.id()));
    }
    for (std::size_t t = 0; t < env.targets().size(); ++t) {
      const auto& node = env.target(t).node_id;
      if (bindings.count(node) != 0) {
        throw ValidationError(fmt::format("node '{}' is bound to targets in two environments", node));
      }
      bindings[node] = {e, t};
      node_set.insert(node);
    }
  }
  for (const auto& l : links) {
    node_set.insert(l.from_node());
    node_set.insert(l.to_node());
  }
  std::vector<std::string> nodes(node_set.begin(), node_set.end());
  const auto index_of = [&nodes](const std::string& id) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), id) - nodes.begin());
  };

  std::vector<GraphEdge> edges;
  for (std::size_t e = 0; e < environments.size(); ++e) {
    const auto& env = environments[e];
    for (const auto& ne : extract_network(env, fields[e])) {
      for (const auto& [a, b] : {std::pair{ne.from_target, ne.to_target}, std::pair{ne.to_target, ne.from_target}}) {
        GraphEdge g;
        g.kind = EdgeKind::Micro;
        g.id = micro_edge_id(env, a, b);
        g.from = index_of(env.target(a).node_id);
        g.to = index_of(env.target(b).node_id);
        g.free_travel_time = ne.free_travel_time;
        g.congestion_reference = ne.free_travel_time;
        if (env.target(a).kind == TargetKind::Delaying) g.congestion_reference += env.target(a).delay.mean();
        g.env = e;
        g.from_target = a;
        g.to_target = b;
        edges.push_back(std::move(g));
      }
    }
  }
  for (std::size_t l = 0; l < links.size(); ++l) {
    GraphEdge g;
    g.kind = EdgeKind::Meso;
    g.id = links[l].id();
    g.from = index_of(links[l].from_node());
    g.to = index_of(links[l].to_node());
    g.free_travel_time = links[l].t_min();
    g.congestion_reference = links[l].t_min();
    g.link = l;
    edges.push_back(std::move(g));
  }
  return GlobalGraph(std::move(nodes), std::move(edges), std::move(bindings));
}

}  // namespace hybridsim
