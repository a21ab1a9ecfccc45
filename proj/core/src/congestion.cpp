#include "hybridsim/congestion.hpp"

#include "hybridsim/error.hpp"

namespace hybridsim {

double external_cost(double exit_time, double relief_time) {
  if (relief_time < exit_time) throw ValidationError("relief precedes exit");
  return relief_time - exit_time;
}

CongestionTracker::CongestionTracker(std::vector<double> references, double epsilon) : epsilon_(epsilon) {
  edges_.resize(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) edges_[i].reference = references[i];
}

CongestionUpdate CongestionTracker::on_exit(std::size_t edge, double observed_travel_time, double t,
                                            std::size_t record) {
  EdgeState& s = edges_.at(edge);
  const bool free_flow = observed_travel_time <= s.reference + epsilon_;
  CongestionUpdate update;
  if (s.state == LinkState::NonCongested) {
    if (free_flow) return update;
    s.state = LinkState::Congested;
    s.since = t;
    s.pending.push_back({record, t});
    update.transition = CongestionTransition{edge, t, LinkState::Congested};
  } else if (free_flow) {
    s.state = LinkState::NonCongested;
    for (const auto& p : s.pending) update.costs.push_back({p.record, p.exit, external_cost(p.exit, t), false});
    s.pending.clear();
    update.transition = CongestionTransition{edge, t, LinkState::NonCongested};
  } else {
    s.pending.push_back({record, t});
  }
  if (update.transition) transitions_.push_back(*update.transition);
  return update;
}

std::vector<CostAssignment> CongestionTracker::finish(double sim_end) {
  std::vector<CostAssignment> out;
  for (auto& s : edges_) {
    for (const auto& p : s.pending) {
      out.push_back({p.record, p.exit, sim_end > p.exit ? sim_end - p.exit : 0.0, true});
    }
    s.pending.clear();
  }
  return out;
}

}  // namespace hybridsim
