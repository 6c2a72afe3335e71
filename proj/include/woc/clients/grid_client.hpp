#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "woc/bus/client.hpp"
#include "woc/clients/converter.hpp"
#include "woc/clients/profile.hpp"
#include "woc/grid/network.hpp"
#include "woc/grid/per_unit.hpp"
#include "woc/powerflow/power_flow.hpp"
#include "woc/ppvc/ppvc.hpp"

namespace woc::clients {

std::string voltage_topic(const std::string& bus);
std::string setpoint_topic(const std::string& generator);
std::string converter_topic(const std::string& generator, const std::string& quantity);
inline const std::string kLossesTopic = "signal/grid/losses";
inline const std::string kDiagnosticTopic = "signal/grid/diagnostic";

// Power exchanged by an externally served device, generator reference.
struct ExternalPower {
  double p_kw = 0.0;
  double q_kvar = 0.0;
};
using ExternalInputs = std::map<std::string, ExternalPower>;
using QSetpoints = std::map<std::string, double>;  // generator -> MVAr

// Network state of one step: loads scaled by the load profile, internal
// generators' P by irradiance, reactive setpoints and external devices applied.
class StepModel {
 public:
  StepModel(const grid::Network& net, Profile load, Profile irradiance);

  grid::PerUnitNetwork network_at(std::uint64_t step, const ExternalInputs& external, const QSetpoints& q) const;
  const grid::PerUnitNetwork& base() const noexcept { return base_; }
  const Profile& load() const noexcept { return load_; }
  const Profile& irradiance() const noexcept { return irradiance_; }

 private:
  grid::PerUnitNetwork base_;
  std::vector<double> q_original_;  // MVAr
  std::vector<double> p_original_;  // MW
  Profile load_;
  Profile irradiance_;
};

// Converter model the grid client may iterate against within one step.
struct RelaxationModel {
  std::string generator;
  std::string bus;
  ConverterState converter;
  DroopCurve curve = DroopCurve::standard();
};

struct GridClientOptions {
  std::string name = "grid";
  ppvc::VoltageBand band;
  powerflow::SolveOptions power_flow;
  int relaxation_iterations = 0;
  double relaxation_tolerance = 1e-6;
  std::optional<RelaxationModel> relaxation;
};

struct GridStepResult {
  std::uint64_t step = 0;
  bool ok = false;
  std::string error;
  powerflow::PowerFlowSolution solution;
  double v_min = 0.0;
  double v_max = 0.0;
  int violations = 0;
  int relaxation_used = 0;
};

class GridClient : public bus::Client {
 public:
  GridClient(StepModel model, GridClientOptions options = {});

  std::string name() const override { return options_.name; }
  bus::ClientMode mode() const override { return bus::ClientMode::Stepped; }
  std::vector<std::string> subscriptions() const override { return {"setpoint/#", "signal/converter/#"}; }
  void on_step(std::uint64_t step, bus::Outbox& out) override;
  void on_publish(const bus::BusMessage& msg, bus::Outbox& out) override;

  // Solves one step against the current caches without publishing.
  GridStepResult solve_step(std::uint64_t step);

  const ExternalInputs& external() const noexcept { return external_; }
  const QSetpoints& setpoints() const noexcept { return q_; }
  const std::vector<std::uint64_t>& steps_seen() const noexcept { return steps_seen_; }
  std::size_t failures() const noexcept { return failures_; }

 private:
  StepModel model_;
  GridClientOptions options_;
  ExternalInputs external_;
  QSetpoints q_;
  std::optional<powerflow::OperatingPoint> warm_;
  std::vector<std::uint64_t> steps_seen_;
  std::size_t failures_ = 0;
};

}  // namespace woc::clients
