#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "woc/bus/client.hpp"
#include "woc/clients/converter.hpp"
#include "woc/clients/profile.hpp"

namespace woc::clients {

struct ConverterClientOptions {
  std::string name = "converter";
  std::string generator = "PV09";
  std::string bus = "node21";
  ConverterState converter;
  DroopCurve curve = DroopCurve::standard();
  Profile irradiance;
};

struct ConverterRecord {
  std::uint64_t step = 0;
  double u = 0.0;
  ConverterOutput output;
  bool held = false;  // voltage of this step missing, last value used
};

// Acts once per step after the grid's voltage for that step has arrived.
class ConverterClient : public bus::Client {
 public:
  explicit ConverterClient(ConverterClientOptions options);

  std::string name() const override { return options_.name; }
  bus::ClientMode mode() const override { return bus::ClientMode::Stepped; }
  std::vector<std::string> subscriptions() const override;
  void on_step(std::uint64_t step, bus::Outbox& out) override;
  void on_publish(const bus::BusMessage& msg, bus::Outbox& out) override;

  const std::vector<ConverterRecord>& history() const noexcept { return history_; }

 private:
  void act(bus::Outbox& out, bool held);

  ConverterClientOptions options_;
  std::string voltage_topic_;
  std::uint64_t step_ = 0;
  bool acked_ = true;
  std::optional<std::uint64_t> voltage_step_;
  double u_ = 1.0;
  std::vector<ConverterRecord> history_;
};

}  // namespace woc::clients
