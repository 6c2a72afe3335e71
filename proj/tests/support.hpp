#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "woc/grid/network.hpp"
#include "woc/grid/network_io.hpp"

namespace testing {

inline std::string data_path(const std::string& rel) { return std::string(WOC_DATA_DIR) + "/" + rel; }

inline woc::grid::Network benchmark() { return woc::grid::parse_network(data_path("cigre_mv.net")); }

inline woc::grid::Network benchmark_modified() {
  auto net = benchmark();
  net = woc::grid::modify_line_length(net, "line1", 0.8);
  net = woc::grid::modify_line_length(net, "line2", 1.4);
  net = woc::grid::modify_line_length(net, "line12", 6.3);
  return net;
}

// Slack at 20 kV feeding one PQ load over a short cable.
inline woc::grid::Network two_bus(double p_mw = 2.0, double q_mvar = 0.8) {
  using namespace woc::grid;
  Network net;
  net.name = "two-bus";
  net.base_mva = 10.0;
  net.buses = {Bus{"a", BusKind::Slack, 20.0, 1.02}, Bus{"b", BusKind::PQ, 20.0, std::nullopt}};
  net.branches = {Branch{"l", "a", "b", 0.4, 0.6, 0.0, 3.0, 1.0}};
  net.loads = {Load{"ld", "b", p_mw, q_mvar}};
  return net;
}

inline std::string scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("woc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace testing
