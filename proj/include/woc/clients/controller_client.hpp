#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "woc/bus/client.hpp"
#include "woc/cells/clustering.hpp"
#include "woc/clients/grid_client.hpp"
#include "woc/ppvc/ppvc.hpp"

namespace woc::clients {

struct ControllerOptions {
  std::string name = "controller";
  std::uint64_t cadence = 15;  // steps between dispatches
  ppvc::PpvcSettings settings;
  std::uint64_t seed = 1;
};

struct DispatchRecord {
  std::uint64_t step = 0;
  double losses_before_mw = 0.0;
  double losses_after_mw = 0.0;
  bool accepted = false;
};

// Free-running PPVC controller. Triggered by the grid's loss publication of
// steps 1, 1 + cadence, ...; rebuilds that step's state and dispatches all cells.
class ControllerClient : public bus::Client {
 public:
  ControllerClient(StepModel model, cells::CellPartition partition, ControllerOptions options = {});

  std::string name() const override { return options_.name; }
  bus::ClientMode mode() const override { return bus::ClientMode::FreeRunning; }
  std::vector<std::string> subscriptions() const override { return {kLossesTopic, "signal/converter/#"}; }
  void on_publish(const bus::BusMessage& msg, bus::Outbox& out) override;

  // One dispatch against `step` with the current caches; publishes nothing.
  DispatchRecord dispatch(std::uint64_t step);

  const QSetpoints& setpoints() const noexcept { return q_; }
  const std::vector<DispatchRecord>& history() const noexcept { return history_; }

 private:
  double global_objective(const grid::PerUnitNetwork& net, double& losses) const;

  StepModel model_;
  cells::CellPartition partition_;
  ControllerOptions options_;
  ExternalInputs external_;
  QSetpoints q_;
  std::vector<DispatchRecord> history_;
};

}  // namespace woc::clients
