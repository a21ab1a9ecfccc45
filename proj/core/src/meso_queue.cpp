#include "hybridsim/meso_queue.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "hybridsim/error.hpp"
#include "text.hpp"

namespace hybridsim {

std::int64_t derived_storage_capacity(double area_m2) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(area_m2 * kMaxDensity + 1e-9)));
}

MesoLink::MesoLink(std::string id, std::string from_node, std::string to_node, double length_m,
                   double area_m2, double free_speed_mps, double flow_capacity,
                   std::optional<std::int64_t> storage_capacity)
    : id_(std::move(id)),
      from_(std::move(from_node)),
      to_(std::move(to_node)),
      length_(length_m),
      area_(area_m2),
      free_speed_(free_speed_mps),
      t_min_(length_m / free_speed_mps),
      flow_capacity_(flow_capacity),
      storage_capacity_(storage_capacity.value_or(derived_storage_capacity(area_m2))),
      storage_given_(storage_capacity.has_value()) {
  if (id_.empty()) throw ValidationError("link id must not be empty");
  if (!(length_ > 0.0)) throw ValidationError(fmt::format("link '{}': length must be positive", id_));
  if (!(area_ >= 0.0)) throw ValidationError(fmt::format("link '{}': area must be non-negative", id_));
  if (!(free_speed_ > 0.0)) throw ValidationError(fmt::format("link '{}': free speed must be positive", id_));
  if (!(flow_capacity_ > 0.0)) {
    throw ValidationError(fmt::format("link '{}': flow capacity must be positive", id_));
  }
  if (storage_capacity_ < 1) {
    throw ValidationError(fmt::format("link '{}': storage capacity must be at least 1", id_));
  }
}

bool MesoLink::try_enter(AgentIndex agent, double t) {
  if (full()) return false;
  queue_.push_back({agent, t, t + t_min_});
  return true;
}

std::vector<AgentIndex> MesoLink::advance(double t, double dt) {
  return advance(t, dt, [](AgentIndex) { return true; });
}

std::vector<AgentIndex> MesoLink::advance(double t, double dt,
                                          const std::function<bool(AgentIndex)>& downstream_accepts) {
  const double per_step = flow_capacity_ * dt;
  // Fractional credit carries over; a held or idle link banks at most one step.
  credit_ = credit_ < 1.0 ? credit_ + per_step : std::min(credit_ + per_step, std::max(1.0, per_step));
  std::vector<AgentIndex> released;
  while (!queue_.empty() && credit_ >= 1.0 - 1e-9) {
    const QueuedAgent& head = queue_.front();
    // Compared as a difference so that exit - entry >= t_min holds exactly.
    if (t - head.entered < t_min_) break;
    if (!downstream_accepts(head.agent)) break;
    released.push_back(head.agent);
    queue_.pop_front();
    credit_ -= 1.0;
  }
  return released;
}

namespace {
constexpr std::string_view kNetworkHeader =
    "link_id,from,to,length_m,area_m2,v_free_mps,fc_agents_per_s,sc_agents";
}

std::vector<MesoLink> load_network(std::string_view csv) {
  std::vector<MesoLink> links;
  std::set<std::string> ids;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (const auto raw : text::lines(csv)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == ';') continue;
    if (!header_seen) {
      if (line != kNetworkHeader) {
        throw ValidationError(fmt::format("network line {}: expected header '{}'", line_no, kNetworkHeader));
      }
      header_seen = true;
      continue;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 8) {
      throw ValidationError(fmt::format("network line {}: expected 8 fields, got {}", line_no, f.size()));
    }
    std::optional<std::int64_t> sc;
    if (!text::trim(f[7]).empty()) sc = text::parse_number<std::int64_t>(f[7], "sc_agents");
    std::string id(text::trim(f[0]));
    if (!ids.insert(id).second) {
      throw ValidationError(fmt::format("network line {}: duplicate link id '{}'", line_no, id));
    }
    try {
      links.emplace_back(id, std::string(text::trim(f[1])), std::string(text::trim(f[2])),
                         text::parse_number<double>(f[3], "length_m"),
                         text::parse_number<double>(f[4], "area_m2"),
                         text::parse_number<double>(f[5], "v_free_mps"),
                         text::parse_number<double>(f[6], "fc_agents_per_s"), sc);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("network line {}: {}", line_no, e.what()));
    }
  }
  if (!header_seen) throw ValidationError("network document is empty");
  return links;
}

std::vector<MesoLink> load_network_file(const std::string& path) {
  try {
    return load_network(text::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string write_network(const std::vector<MesoLink>& links) {
  std::string out(kNetworkHeader);
  out += '\n';
  for (const auto& l : links) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", l.id(), l.from_node(), l.to_node(), l.length(), l.area(),
                       l.free_speed(), l.flow_capacity(),
                       l.storage_given() ? fmt::format("{}", l.storage_capacity()) : std::string());
  }
  return out;
}

}  // namespace hybridsim
