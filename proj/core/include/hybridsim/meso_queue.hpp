#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridsim/ca_engine.hpp"

namespace hybridsim {

// Storage capacity implied by an area at the CA's maximum density.
std::int64_t derived_storage_capacity(double area_m2);

struct QueuedAgent {
  AgentIndex agent = 0;
  double entered = 0.0;
  double earliest_exit = 0.0;
};

// FIFO queue link. Agents cannot leave before t_min = length / free_speed,
// leave at most at rate flow_capacity, and at most storage_capacity agents
// are inside at once.
class MesoLink {
 public:
  MesoLink(std::string id, std::string from_node, std::string to_node, double length_m,
           double area_m2, double free_speed_mps, double flow_capacity,
           std::optional<std::int64_t> storage_capacity = std::nullopt);

  const std::string& id() const { return id_; }
  const std::string& from_node() const { return from_; }
  const std::string& to_node() const { return to_; }
  double length() const { return length_; }
  double area() const { return area_; }
  double free_speed() const { return free_speed_; }
  double t_min() const { return t_min_; }
  double flow_capacity() const { return flow_capacity_; }
  std::int64_t storage_capacity() const { return storage_capacity_; }
  // True when the storage capacity came from the input rather than the area.
  bool storage_given() const { return storage_given_; }

  std::size_t size() const { return queue_.size(); }
  bool full() const { return static_cast<std::int64_t>(queue_.size()) >= storage_capacity_; }
  const std::deque<QueuedAgent>& queue() const { return queue_; }
  double outflow_credit() const { return credit_; }

  // Appends the agent if there is storage left.
  bool try_enter(AgentIndex agent, double t);

  // Adds FC*dt of outflow credit, then releases head agents whose earliest
  // exit has passed while credit lasts and `downstream_accepts` agrees. A
  // refused head blocks the queue until a later step.
  std::vector<AgentIndex> advance(double t, double dt,
                                  const std::function<bool(AgentIndex)>& downstream_accepts);
  std::vector<AgentIndex> advance(double t, double dt);

  // Queue state is excluded: two links are equal when their parameters are.
  friend bool operator==(const MesoLink& a, const MesoLink& b) {
    return a.id_ == b.id_ && a.from_ == b.from_ && a.to_ == b.to_ && a.length_ == b.length_ &&
           a.area_ == b.area_ && a.free_speed_ == b.free_speed_ &&
           a.flow_capacity_ == b.flow_capacity_ && a.storage_capacity_ == b.storage_capacity_;
  }

 private:
  std::string id_;
  std::string from_;
  std::string to_;
  double length_;
  double area_;
  double free_speed_;
  double t_min_;
  double flow_capacity_;
  std::int64_t storage_capacity_;
  bool storage_given_;
  std::deque<QueuedAgent> queue_;
  double credit_ = 0.0;
};

// Network CSV: link_id,from,to,length_m,area_m2,v_free_mps,fc_agents_per_s,sc_agents
std::vector<MesoLink> load_network(std::string_view csv);
std::vector<MesoLink> load_network_file(const std::string& path);
std::string write_network(const std::vector<MesoLink>& links);

}  // namespace hybridsim
