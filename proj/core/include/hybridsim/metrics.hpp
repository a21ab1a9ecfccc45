#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybridsim/ca_engine.hpp"
#include "hybridsim/environment.hpp"
#include "hybridsim/event_log.hpp"
#include "hybridsim/scenario.hpp"

namespace hybridsim {

// Travel-time measures of one group. With n = 0 every measure is absent and
// written as an empty CSV field.
struct StatsRow {
  std::string label;
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  double avg = 0.0;
  double var = 0.0;  // population variance
  double sd = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
  double total = 0.0;  // process total time, the maximum

  bool empty() const { return n == 0; }
};

// Nearest-rank percentile of sorted values: the ceil(p*n/100)-th smallest.
double nearest_rank(const std::vector<double>& sorted, int percent);
StatsRow compute_stats(std::string label, std::vector<double> durations);

// Per agent of the segment's group: time from first reaching one of the
// from-nodes to first reaching one of the to-nodes afterwards.
std::vector<double> segment_durations(const EventLog& log, const SegmentDefinition& segment);
// Segment definitions embedded in a log.
std::vector<SegmentDefinition> segments_from_log(const EventLog& log);
std::vector<StatsRow> travel_time_stats(const EventLog& log, const std::vector<SegmentDefinition>& segments);
std::string write_stats(const std::vector<StatsRow>& rows);

struct LandingCycle {
  std::string cycle;
  double disembark = 0.0;  // max disembark duration
  double board = 0.0;      // max boarding duration
  double total = 0.0;      // disembark + board
  std::size_t disembark_n = 0;
  std::size_t board_n = 0;
};

// Cycles from the segment records of a log. Throws ValidationError when no
// segment carries a cycle tag and role.
std::vector<LandingCycle> landing_cycle_report(const EventLog& log);
std::string write_cycle_report(const std::vector<LandingCycle>& cycles);

struct BottleneckConfig {
  double omega_min = 0.4;
  double omega_max = 5.2;
  double omega_step = 0.4;
  int agents = 350;
  double window_start = 5.0;
  double window_end = 35.0;
  int room_width = 20;   // cells
  int source_rows = 25;  // rows upstream of the dividing wall
  int exit_rows = 10;    // rows between the wall and the exit border
  double max_time = 900.0;
  std::uint64_t seed = 1;
  CaConfig ca;
};

struct BottleneckResult {
  double omega = 0.0;
  double flow = 0.0;  // agents per second inside the measurement window
  double window_start = 0.0;
  double window_end = 0.0;  // clipped at the last passage
  std::size_t discharged = 0;
  std::vector<std::size_t> per_second;  // passages per whole second
};

// Rectangular room split by a wall with a central opening of omega meters;
// the exit is the whole far border row.
GridEnvironment bottleneck_room(double omega, const BottleneckConfig& config);
BottleneckResult run_bottleneck(double omega, const BottleneckConfig& config);
std::vector<double> omega_values(const BottleneckConfig& config);
std::vector<BottleneckResult> bottleneck_sweep(const BottleneckConfig& config);
std::string write_bottleneck(const std::vector<BottleneckResult>& results);

// Highest occupancy of a square window of `window_cells` cells per side,
// divided by the window area.
double max_window_density(const MicroWorld& world, int window_cells = 5);

// Running maximum of max_window_density over observed worlds.
class DensityProbe {
 public:
  explicit DensityProbe(int window_cells = 5) : window_cells_(window_cells) {}
  void observe(const MicroWorld& world);
  void observe(const std::vector<MicroWorld>& worlds);
  double max_density() const { return max_; }
  std::size_t samples() const { return samples_; }

 private:
  int window_cells_;
  double max_ = 0.0;
  std::size_t samples_ = 0;
};

}  // namespace hybridsim
