#include "woc/grid/network.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace woc::grid {

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack:
      return "slack";
    case BusKind::PV:
      return "pv";
    case BusKind::PQ:
      return "pq";
  }
  return "pq";
}

std::optional<BusKind> bus_kind_from_string(std::string_view text) {
  if (text == "slack" || text == "Slack" || text == "SLACK") return BusKind::Slack;
  if (text == "pv" || text == "PV") return BusKind::PV;
  if (text == "pq" || text == "PQ") return BusKind::PQ;
  return std::nullopt;
}

namespace {

template <typename T>
void check_unique(const std::vector<T>& items, std::string_view what) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.id.empty()) {
      throw NetworkError(fmt::format("{} with empty id", what));
    }
    if (!seen.insert(item.id).second) {
      throw NetworkError(fmt::format("duplicate {} id '{}'", what, item.id));
    }
  }
}

}  // namespace

void Network::validate() const {
  if (!(base_mva > 0.0) || !std::isfinite(base_mva)) {
    throw NetworkError(fmt::format("base_mva must be positive, got {}", base_mva));
  }
  if (!(base_frequency_hz > 0.0)) {
    throw NetworkError("base_frequency_hz must be positive");
  }
  check_unique(buses, "bus");
  check_unique(branches, "branch");
  check_unique(loads, "load");
  check_unique(generators, "generator");

  std::size_t slack_count = 0;
  for (const auto& b : buses) {
    if (!(b.nominal_kv > 0.0) || !std::isfinite(b.nominal_kv)) {
      throw NetworkError(fmt::format("bus '{}': nominal_kv must be > 0", b.id));
    }
    if (b.kind == BusKind::Slack) {
      ++slack_count;
    }
    if (b.kind != BusKind::PQ && !b.v_set) {
      throw NetworkError(fmt::format("bus '{}': {} bus needs v_set", b.id, to_string(b.kind)));
    }
    if (b.v_set && (*b.v_set < 0.8 || *b.v_set > 1.2)) {
      throw NetworkError(fmt::format("bus '{}': v_set {} outside [0.8, 1.2] pu", b.id, *b.v_set));
    }
  }
  if (slack_count == 0) {
    throw NetworkError("network has no slack bus");
  }
  if (slack_count > 1) {
    throw NetworkError(fmt::format("network has {} slack buses, expected exactly one", slack_count));
  }

  for (const auto& br : branches) {
    if (find_bus(br.from_bus) == nullptr) {
      throw NetworkError(fmt::format("branch '{}' references unknown bus '{}'", br.id, br.from_bus));
    }
    if (find_bus(br.to_bus) == nullptr) {
      throw NetworkError(fmt::format("branch '{}' references unknown bus '{}'", br.id, br.to_bus));
    }
    if (br.from_bus == br.to_bus) {
      throw NetworkError(fmt::format("branch '{}' connects bus '{}' to itself", br.id, br.from_bus));
    }
    if (!(br.length_km > 0.0) || !std::isfinite(br.length_km)) {
      throw NetworkError(fmt::format("branch '{}': length must be > 0 km, got {}", br.id, br.length_km));
    }
    if (!std::isfinite(br.r_per_km) || !std::isfinite(br.x_per_km) || !std::isfinite(br.b_per_km)) {
      throw NetworkError(fmt::format("branch '{}': non-finite impedance", br.id));
    }
    if (br.r_per_km < 0.0) {
      throw NetworkError(fmt::format("branch '{}': negative resistance", br.id));
    }
    if (br.r_per_km == 0.0 && br.x_per_km == 0.0) {
      throw NetworkError(fmt::format("branch '{}': zero impedance", br.id));
    }
    if (!(br.tap_ratio > 0.0) || !std::isfinite(br.tap_ratio)) {
      throw NetworkError(fmt::format("branch '{}': tap_ratio must be > 0", br.id));
    }
  }
  for (const auto& l : loads) {
    if (find_bus(l.bus) == nullptr) {
      throw NetworkError(fmt::format("load '{}' references unknown bus '{}'", l.id, l.bus));
    }
    if (!std::isfinite(l.p_mw) || !std::isfinite(l.q_mvar)) {
      throw NetworkError(fmt::format("load '{}': non-finite power", l.id));
    }
  }
  for (const auto& g : generators) {
    if (find_bus(g.bus) == nullptr) {
      throw NetworkError(fmt::format("generator '{}' references unknown bus '{}'", g.id, g.bus));
    }
    if (!std::isfinite(g.p_mw) || !std::isfinite(g.q_mvar) || !std::isfinite(g.q_min_mvar) ||
        !std::isfinite(g.q_max_mvar)) {
      throw NetworkError(fmt::format("generator '{}': non-finite value", g.id));
    }
    if (g.q_min_mvar > g.q_max_mvar) {
      throw NetworkError(fmt::format("generator '{}': q_min > q_max", g.id));
    }
    if (g.controllable && (g.q_mvar < g.q_min_mvar || g.q_mvar > g.q_max_mvar)) {
      throw NetworkError(fmt::format("generator '{}': q_set {} outside [{}, {}]", g.id, g.q_mvar,
                                     g.q_min_mvar, g.q_max_mvar));
    }
  }
}

const Bus* Network::find_bus(std::string_view id) const {
  for (const auto& b : buses) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const Branch* Network::find_branch(std::string_view id) const {
  for (const auto& b : branches) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const Generator* Network::find_generator(std::string_view id) const {
  for (const auto& g : generators) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

std::size_t Network::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  throw NetworkError(fmt::format("unknown bus '{}'", id));
}

std::size_t Network::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].kind == BusKind::Slack) return i;
  }
  throw NetworkError("network has no slack bus");
}

Network modify_line_length(const Network& net, std::string_view line_id, double new_length_km) {
  if (!(new_length_km > 0.0) || !std::isfinite(new_length_km)) {
    throw NetworkError(fmt::format("line '{}': new length must be > 0 km, got {}", line_id, new_length_km));
  }
  Network out = net;
  for (auto& br : out.branches) {
    if (br.id == line_id) {
      br.length_km = new_length_km;
      return out;
    }
  }
  throw NetworkError(fmt::format("unknown line '{}'", line_id));
}

}  // namespace woc::grid
