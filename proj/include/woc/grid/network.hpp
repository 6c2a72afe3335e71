#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace woc::grid {

/// Raised when a network violates a structural invariant (dangling
/// reference, duplicate id, bad length, slack count, ...).
class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BusKind { Slack, PV, PQ };

std::string_view to_string(BusKind kind);
std::optional<BusKind> bus_kind_from_string(std::string_view text);

struct Bus {
  std::string id;
  BusKind kind = BusKind::PQ;
  double nominal_kv = 0.0;
  std::optional<double> v_set;  // per-unit, Slack/PV only

  bool operator==(const Bus&) const = default;
};

/// Line or transformer. Impedances are per km; a transformer is a branch
/// with an off-nominal `tap_ratio` on the from side and its impedance
/// referred to the to-bus voltage level.
struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double r_per_km = 0.0;  // ohm/km
  double x_per_km = 0.0;  // ohm/km
  double b_per_km = 0.0;  // S/km, total line charging
  double length_km = 1.0;
  double tap_ratio = 1.0;

  bool operator==(const Branch&) const = default;
};

struct Load {
  std::string id;
  std::string bus;
  double p_mw = 0.0;
  double q_mvar = 0.0;

  bool operator==(const Load&) const = default;
};

struct Generator {
  std::string id;
  std::string bus;
  double p_mw = 0.0;
  double q_mvar = 0.0;
  double q_min_mvar = 0.0;
  double q_max_mvar = 0.0;
  bool controllable = false;
  // Served by a co-simulation client instead of the internal model.
  bool external = false;

  bool operator==(const Generator&) const = default;
};

struct Network {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Load> loads;
  std::vector<Generator> generators;
  double base_frequency_hz = 50.0;
  double base_mva = 100.0;

  bool operator==(const Network&) const = default;

  /// Throws NetworkError describing the first violated invariant.
  void validate() const;

  const Bus* find_bus(std::string_view id) const;
  const Branch* find_branch(std::string_view id) const;
  const Generator* find_generator(std::string_view id) const;
  std::size_t bus_index(std::string_view id) const;
  std::size_t slack_index() const;
};

/// Copy of `net` with branch `line_id` set to `new_length_km`.
Network modify_line_length(const Network& net, std::string_view line_id, double new_length_km);

}  // namespace woc::grid
