#pragma once

#include <complex>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "woc/grid/network.hpp"

namespace woc::grid {

using Complex = std::complex<double>;

struct PuBus {
  std::string id;
  BusKind kind = BusKind::PQ;
  double nominal_kv = 0.0;
  double v_set = 1.0;
  bool has_v_set = false;
};

struct PuBranch {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  Complex z;             // series impedance, pu
  double b_shunt = 0.0;  // total charging susceptance, pu
  double tap_ratio = 1.0;
  double z_base = 1.0;  // ohm, on the to-bus voltage level
  double length_km = 1.0;
};

struct PuLoad {
  std::string id;
  std::size_t bus = 0;
  Complex s;  // consumption, pu
};

struct PuGenerator {
  std::string id;
  std::size_t bus = 0;
  Complex s;  // generation, pu
  double q_min = 0.0;
  double q_max = 0.0;
  bool controllable = false;
  bool external = false;
};

/// Network on a common MVA base with buses in index order.
class PerUnitNetwork {
 public:
  std::string name;
  double base_mva = 100.0;
  double base_frequency_hz = 50.0;
  std::vector<PuBus> buses;
  std::vector<PuBranch> branches;
  std::vector<PuLoad> loads;
  std::vector<PuGenerator> generators;

  std::size_t slack() const noexcept { return slack_; }
  std::size_t bus_count() const noexcept { return buses.size(); }
  std::size_t bus_index(const std::string& id) const;
  const PuGenerator& generator(const std::string& id) const;
  PuGenerator& generator(const std::string& id);

  /// Scheduled net injection (generation minus load) per bus, pu.
  std::vector<Complex> scheduled_injections() const;

 private:
  friend PerUnitNetwork to_per_unit(const Network& net);
  std::size_t slack_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

PerUnitNetwork to_per_unit(const Network& net);

/// Inverse of to_per_unit.
Network to_physical(const PerUnitNetwork& pu);

/// Dense complex bus admittance matrix (pi branch model, tap on from side).
Eigen::MatrixXcd admittance_matrix(const PerUnitNetwork& net);

}  // namespace woc::grid
