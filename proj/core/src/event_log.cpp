#include "hybridsim/event_log.hpp"

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "text.hpp"

namespace hybridsim {

void EventLog::append(double time, std::string_view kind, std::string_view agent, std::string_view subject,
                      std::string detail) {
  records_.push_back({time, std::string(kind), std::string(agent), std::string(subject), std::move(detail)});
}

std::string EventLog::format(const EventRecord& r) {
  return fmt::format("{:.4f},{},{},{},{}", r.time, r.kind, r.agent, r.subject, r.detail);
}

std::string EventLog::serialize() const {
  std::string out;
  out.reserve(records_.size() * 40);
  for (const auto& r : records_) {
    out += format(r);
    out += '\n';
  }
  return out;
}

EventLog EventLog::parse(std::string_view text) {
  EventLog log;
  std::size_t line_no = 0;
  for (const auto raw : text::lines(text)) {
    ++line_no;
    if (text::trim(raw).empty()) continue;
    const auto f = text::split(raw, ',');
    if (f.size() != 5) {
      throw ValidationError(fmt::format("event log line {}: expected 5 fields, got {}", line_no, f.size()));
    }
    log.records_.push_back({text::parse_number<double>(f[0], "event time"), std::string(f[1]),
                            std::string(f[2]), std::string(f[3]), std::string(f[4])});
  }
  return log;
}

EventLog EventLog::read(const std::string& path) {
  try {
    return parse(text::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void EventLog::write(const std::string& path) const { text::write_file(path, serialize()); }

std::string_view detail_value(std::string_view detail, std::string_view key) {
  for (const auto part : text::split(detail, ';')) {
    const auto eq = part.find('=');
    if (eq != std::string_view::npos && part.substr(0, eq) == key) return part.substr(eq + 1);
  }
  return {};
}

}  // namespace hybridsim
