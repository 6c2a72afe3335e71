#include "woc/clients/converter_client.hpp"

#include "woc/clients/grid_client.hpp"

namespace woc::clients {

ConverterClient::ConverterClient(ConverterClientOptions options)
    : options_(std::move(options)), voltage_topic_(voltage_topic(options_.bus)) {
  options_.curve.validate();
}

std::vector<std::string> ConverterClient::subscriptions() const { return {voltage_topic_, kDiagnosticTopic}; }

void ConverterClient::on_step(std::uint64_t step, bus::Outbox& out) {
  step_ = step;
  acked_ = false;
  if (voltage_step_ == step) act(out, false);
}

void ConverterClient::on_publish(const bus::BusMessage& msg, bus::Outbox& out) {
  const auto step = msg.step.value_or(0);
  if (msg.topic == voltage_topic_ && msg.val.is_number()) {
    u_ = msg.val.get<double>();
    voltage_step_ = step;
    if (!acked_ && step == step_) act(out, false);
  } else if (msg.topic == kDiagnosticTopic && !acked_ && step == step_) {
    act(out, true);
  }
}

void ConverterClient::act(bus::Outbox& out, bool held) {
  ConverterRecord rec;
  rec.step = step_;
  rec.u = u_;
  rec.held = held;
  rec.output = converter_step(options_.converter, u_, options_.irradiance.at(step_), options_.curve);
  history_.push_back(rec);
  out.publish(converter_topic(options_.generator, "p_kw"), step_, rec.output.p_kw);
  out.publish(converter_topic(options_.generator, "q_kvar"), step_, rec.output.q_kvar);
  if (held) out.publish(converter_topic(options_.generator, "quality"), step_, 0);
  out.step_done(step_);
  acked_ = true;
}

}  // namespace woc::clients
