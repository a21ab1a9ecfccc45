#pragma once

#include <string>

#include "hybridsim/scenario.hpp"

namespace hybridsim::testing {

inline std::string data_path(const std::string& relative) { return std::string(HYBRIDSIM_DATA_DIR) + "/" + relative; }

inline const Scenario& observed_peak() {
  static const Scenario s = load_scenario(data_path("synthetic-terminal/observed-peak.manifest"));
  return s;
}

inline const Scenario& projection_2017() {
  static const Scenario s = load_scenario(data_path("synthetic-terminal/projection-2017.manifest"));
  return s;
}

inline Scenario two_route() { return load_scenario(data_path("two-route/two-route.manifest")); }

inline constexpr const char* kNetworkHeader = "link_id,from,to,length_m,area_m2,v_free_mps,fc_agents_per_s,sc_agents\n";

// Single-link queue scenario O -> D with `count` agents departing at 0.
inline Scenario single_link(const std::string& link_row, int count, double sim_end = 4000.0) {
  ScenarioDocuments docs;
  docs.network = std::string(kNetworkHeader) + link_row + "\n";
  docs.demand_spec = "group,count,origin,destination,departure,window_start_s,window_end_s\n"
                     "g," + std::to_string(count) + ",O,D,at_once,0,0\n";
  docs.settings["sim_end"] = std::to_string(sim_end);
  return assemble(docs);
}

}  // namespace hybridsim::testing
