#pragma once

#include <string_view>
#include <vector>

#include "hybridsim/global_graph.hpp"

namespace hybridsim {

enum class RelaxMode { NashEquilibrium, SystemOptimum };

std::string_view to_string(RelaxMode mode);
// Accepts "nash" and "so" (also the long names). Throws ValidationError.
RelaxMode parse_relax_mode(std::string_view text);

struct Plan {
  std::vector<std::size_t> nodes;  // origin first, destination last
  std::vector<std::size_t> edges;  // edges[i] joins nodes[i] -> nodes[i+1]
  double departure = 0.0;
  double score = 0.0;

  friend bool operator==(const Plan&, const Plan&) = default;
};

// Edge-connected with the given endpoints.
bool plan_is_valid(const GlobalGraph& graph, const Plan& plan, std::size_t origin, std::size_t destination);

}  // namespace hybridsim
