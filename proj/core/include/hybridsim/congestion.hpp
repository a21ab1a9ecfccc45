#pragma once

#include <optional>
#include <vector>

namespace hybridsim {

// Delay an agent imposes on others: time from its exit of a congested edge
// until the edge switches back to non-congested.
double external_cost(double exit_time, double relief_time);

enum class LinkState { NonCongested, Congested };

struct CongestionTransition {
  std::size_t edge = 0;
  double time = 0.0;
  LinkState to = LinkState::Congested;
  friend bool operator==(const CongestionTransition&, const CongestionTransition&) = default;
};

struct CostAssignment {
  std::size_t record = 0;  // caller-chosen exit id
  double exit = 0.0;
  double cost = 0.0;
  bool unrelieved = false;  // congestion never cleared before the end of the run
};

struct CongestionUpdate {
  std::optional<CongestionTransition> transition;
  std::vector<CostAssignment> costs;  // exits whose external cost became final
};

// Per-edge congestion state machine. All edges start non-congested. An exit
// slower than reference + epsilon congests the edge; the first exit within
// reference + epsilon relieves it and prices every exit made while it was
// congested (including the one that congested it).
class CongestionTracker {
 public:
  CongestionTracker(std::vector<double> references, double epsilon);

  CongestionUpdate on_exit(std::size_t edge, double observed_travel_time, double t, std::size_t record);
  // Prices the still-pending exits against the end of the run.
  std::vector<CostAssignment> finish(double sim_end);

  LinkState state(std::size_t edge) const { return edges_.at(edge).state; }
  double congested_since(std::size_t edge) const { return edges_.at(edge).since; }
  std::size_t pending(std::size_t edge) const { return edges_.at(edge).pending.size(); }
  const std::vector<CongestionTransition>& transitions() const { return transitions_; }
  double epsilon() const { return epsilon_; }

 private:
  struct PendingExit {
    std::size_t record;
    double exit;
  };
  struct EdgeState {
    double reference = 0.0;
    LinkState state = LinkState::NonCongested;
    double since = 0.0;
    std::vector<PendingExit> pending;
  };
  std::vector<EdgeState> edges_;
  double epsilon_;
  std::vector<CongestionTransition> transitions_;
};

}  // namespace hybridsim
