#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hybridsim {

// One line of the event log: `time,kind,agent,edge_or_node,detail`. Times are
// written with four decimals; detail holds `key=value` pairs joined by ';'.
struct EventRecord {
  double time = 0.0;
  std::string kind;
  std::string agent;
  std::string subject;
  std::string detail;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

namespace event_kind {
inline constexpr std::string_view kSegment = "segment";
inline constexpr std::string_view kDepart = "depart";
inline constexpr std::string_view kNode = "node";
inline constexpr std::string_view kEnter = "enter";
inline constexpr std::string_view kLeave = "leave";
inline constexpr std::string_view kMove = "move";
inline constexpr std::string_view kDelay = "delay";
inline constexpr std::string_view kWait = "wait";
inline constexpr std::string_view kBoard = "board";
inline constexpr std::string_view kArrive = "arrive";
inline constexpr std::string_view kStranded = "stranded";
inline constexpr std::string_view kCongested = "congested";
inline constexpr std::string_view kRelieved = "relieved";
inline constexpr std::string_view kExternalCost = "extcost";
}  // namespace event_kind

class EventLog {
 public:
  void append(double time, std::string_view kind, std::string_view agent, std::string_view subject,
              std::string detail = {});
  void append(EventRecord record) { records_.push_back(std::move(record)); }

  const std::vector<EventRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::string serialize() const;
  static std::string format(const EventRecord& record);
  // Throws ValidationError on malformed lines.
  static EventLog parse(std::string_view text);
  static EventLog read(const std::string& path);
  void write(const std::string& path) const;

 private:
  std::vector<EventRecord> records_;
};

// Value of `key` in a `k=v;k=v` detail string, or empty.
std::string_view detail_value(std::string_view detail, std::string_view key);

}  // namespace hybridsim
