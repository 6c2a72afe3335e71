#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "woc/bus/broker.hpp"
#include "woc/clients/converter.hpp"
#include "woc/ppvc/differential_evolution.hpp"
#include "woc/ppvc/ppvc.hpp"

namespace woc::experiment {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Transport { InProcess, TcpThreads, Spawn };

std::string_view to_string(Transport t);
std::optional<Transport> transport_from_string(std::string_view text);

struct ConverterConfig {
  std::string generator = "PV09";
  std::string bus = "node21";
  double rated_s_kva = 30.0;
  double q_max_kvar = 15.0;
  double p_peak_kw = 25.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  // Paths as written; relative ones resolve against base_dir.
  std::string network = "cigre_mv.net";
  std::string load_profile = "profiles/load.csv";
  std::string irradiance_profile = "profiles/irradiance.csv";
  std::string base_dir = ".";
  std::string output_dir = "results";

  bus::Schedule schedule;
  std::vector<bus::ManifestEntry> clients;
  Transport transport = Transport::InProcess;
  std::uint16_t port = 0;  // 0: ephemeral

  std::size_t k = 3;
  bool modified = false;
  std::map<std::string, double> line_lengths;  // applied when modified

  ppvc::DeParams de{20, 0.7, 0.9, 60, 1e-9, 1};
  ppvc::VoltageBand band;
  double penalty_weight = 1e4;
  std::uint64_t cadence = 15;
  std::uint64_t seed = 1;

  clients::DroopCurve droop = clients::DroopCurve::standard();
  ConverterConfig converter;
  int relaxation_iterations = 0;

  std::string resolve(const std::string& path) const;
  bool has_client(const std::string& name) const;
  // Clients actually launched: the controller only when k >= 1.
  std::vector<bus::ManifestEntry> roster() const;
  bus::Manifest manifest() const;
  void validate() const;
};

// Line-length study: line1 2.8 -> 0.8, line2 4.4 -> 1.4, line12 1.3 -> 6.3 km.
std::map<std::string, double> line_length_study();

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
// Canonical text form, also the snapshot written to results.
std::string serialize_config(const ExperimentConfig& c);
std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace woc::experiment
