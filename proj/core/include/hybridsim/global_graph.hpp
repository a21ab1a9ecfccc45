#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridsim/environment.hpp"
#include "hybridsim/meso_queue.hpp"

namespace hybridsim {

enum class EdgeKind { Meso, Micro };

struct GraphEdge {
  EdgeKind kind = EdgeKind::Meso;
  std::string id;
  std::size_t from = 0;  // node index
  std::size_t to = 0;
  double free_travel_time = 0.0;
  // Free-flow reference for congestion detection: free_travel_time plus the
  // mean delay of a delaying from-target.
  double congestion_reference = 0.0;
  std::size_t link = 0;  // Meso: index into the link list
  std::size_t env = 0;   // Micro: environment index and target indices
  std::size_t from_target = 0;
  std::size_t to_target = 0;
};

struct NodeBinding {
  std::size_t env = 0;
  std::size_t target = 0;
};

// Routing graph shared by both scales. Nodes are indexed in ascending id
// order, so comparing index sequences compares node-id sequences.
class GlobalGraph {
 public:
  GlobalGraph() = default;
  GlobalGraph(std::vector<std::string> node_ids, std::vector<GraphEdge> edges,
              std::map<std::string, NodeBinding> bindings);

  std::size_t node_count() const { return nodes_.size(); }
  const std::string& node_id(std::size_t i) const { return nodes_.at(i); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  std::optional<std::size_t> node_index(std::string_view id) const;

  const std::vector<GraphEdge>& edges() const { return edges_; }
  const GraphEdge& edge(std::size_t i) const { return edges_.at(i); }
  const std::vector<std::size_t>& out_edges(std::size_t node) const { return out_.at(node); }
  std::optional<std::size_t> find_edge(std::string_view id) const;

  // Micro target bound to a node, if any.
  std::optional<NodeBinding> binding(std::size_t node) const;

  std::vector<double> free_travel_times() const;
  bool reachable(std::size_t from, std::size_t to) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::optional<NodeBinding>> bindings_;
};

std::string micro_edge_id(const GridEnvironment& env, std::size_t from_target, std::size_t to_target);

// Micro edges come from network extraction of every environment (both
// directions), meso edges from the links. Throws ValidationError when a node
// is bound to targets in two environments.
GlobalGraph build_global_graph(const std::vector<GridEnvironment>& environments,
                               const std::vector<std::vector<FloorField>>& fields,
                               const std::vector<MesoLink>& links);

}  // namespace hybridsim
