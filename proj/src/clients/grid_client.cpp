#include "woc/clients/grid_client.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace woc::clients {

std::string voltage_topic(const std::string& bus) { return fmt::format("signal/grid/{}/voltage", bus); }
std::string setpoint_topic(const std::string& generator) { return fmt::format("setpoint/{}/q_mvar", generator); }
std::string converter_topic(const std::string& generator, const std::string& quantity) {
  return fmt::format("signal/converter/{}/{}", generator, quantity);
}

StepModel::StepModel(const grid::Network& net, Profile load, Profile irradiance)
    : base_(grid::to_per_unit(net)), load_(std::move(load)), irradiance_(std::move(irradiance)) {
  for (const auto& g : base_.generators) {
    p_original_.push_back(g.s.real() * base_.base_mva);
    q_original_.push_back(g.s.imag() * base_.base_mva);
  }
}

grid::PerUnitNetwork StepModel::network_at(std::uint64_t step, const ExternalInputs& external, const QSetpoints& q) const {
  grid::PerUnitNetwork net = base_;
  const double scale = load_.at(step);
  const double sun = irradiance_.at(step);
  for (auto& l : net.loads) l.s *= scale;
  const double base = net.base_mva;
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    auto& g = net.generators[i];
    if (g.external) {
      auto it = external.find(g.id);
      const ExternalPower e = it == external.end() ? ExternalPower{} : it->second;
      g.s = grid::Complex(e.p_kw / 1000.0, e.q_kvar / 1000.0) / base;
      continue;
    }
    auto it = q.find(g.id);
    const double q_mvar = it == q.end() ? q_original_[i] : it->second;
    g.s = grid::Complex(p_original_[i] * sun, q_mvar) / base;
  }
  return net;
}

GridClient::GridClient(StepModel model, GridClientOptions options)
    : model_(std::move(model)), options_(std::move(options)) {}

void GridClient::on_publish(const bus::BusMessage& msg, bus::Outbox&) {
  if (!msg.val.is_number()) return;
  const double value = msg.val.get<double>();
  // setpoint/<gen>/q_mvar
  if (msg.topic.rfind("setpoint/", 0) == 0) {
    const auto rest = msg.topic.substr(9);
    const auto slash = rest.find('/');
    if (slash == std::string::npos || rest.substr(slash + 1) != "q_mvar") return;
    const auto gen = rest.substr(0, slash);
    auto it = std::find_if(model_.base().generators.begin(), model_.base().generators.end(),
                           [&](const grid::PuGenerator& g) { return g.id == gen; });
    if (it == model_.base().generators.end() || it->external) {
      spdlog::warn("grid: ignoring setpoint for unknown generator '{}'", gen);
      return;
    }
    const double base = model_.base().base_mva;
    q_[gen] = std::clamp(value, it->q_min * base, it->q_max * base);
    return;
  }
  // signal/converter/<gen>/{p_kw,q_kvar}
  constexpr std::string_view prefix = "signal/converter/";
  if (msg.topic.rfind(prefix, 0) == 0) {
    const auto rest = msg.topic.substr(prefix.size());
    const auto slash = rest.find('/');
    if (slash == std::string::npos) return;
    const auto gen = rest.substr(0, slash);
    const auto quantity = rest.substr(slash + 1);
    if (quantity == "p_kw") external_[gen].p_kw = value;
    if (quantity == "q_kvar") external_[gen].q_kvar = value;
  }
}

GridStepResult GridClient::solve_step(std::uint64_t step) {
  GridStepResult r;
  r.step = step;
  ExternalInputs external = external_;
  try {
    auto opts = options_.power_flow;
    opts.warm_start = warm_;
    r.solution = powerflow::solve_power_flow(model_.network_at(step, external, q_), opts);
    if (r.solution.converged && options_.relaxation && options_.relaxation_iterations > 0) {
      const auto& rm = *options_.relaxation;
      const auto bus = model_.base().bus_index(rm.bus);
      for (int k = 0; k < options_.relaxation_iterations; ++k) {
        ConverterState state = rm.converter;
        const auto out = converter_step(state, r.solution.v[bus], model_.irradiance().at(step), rm.curve);
        external[rm.generator] = ExternalPower{out.p_kw, out.q_kvar};
        opts.warm_start = r.solution.operating_point();
        auto next = powerflow::solve_power_flow(model_.network_at(step, external, q_), opts);
        const double change = std::abs(next.v[bus] - r.solution.v[bus]);
        r.solution = std::move(next);
        r.relaxation_used = k + 1;
        if (!r.solution.converged || change < options_.relaxation_tolerance) break;
      }
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    return r;
  }
  if (!r.solution.converged) {
    r.error = fmt::format("power flow did not converge (mismatch {:.3g} after {} iterations{})",
                          r.solution.max_mismatch, r.solution.iterations,
                          r.solution.collapsed ? ", voltage collapse" : "");
    return r;
  }
  r.ok = true;
  warm_ = r.solution.operating_point();
  r.v_min = std::numeric_limits<double>::infinity();
  r.v_max = -r.v_min;
  const auto& base = model_.base();
  for (std::size_t i = 0; i < base.buses.size(); ++i) {
    if (i == base.slack()) continue;
    const double v = r.solution.v[i];
    r.v_min = std::min(r.v_min, v);
    r.v_max = std::max(r.v_max, v);
    if (v < options_.band.lo || v > options_.band.hi) ++r.violations;
  }
  return r;
}

void GridClient::on_step(std::uint64_t step, bus::Outbox& out) {
  steps_seen_.push_back(step);
  const auto r = solve_step(step);
  if (!r.ok) {
    ++failures_;
    out.publish(kDiagnosticTopic, step, bus::Json{{"quality", "failed"}, {"error", r.error}});
    out.step_done(step);
    return;
  }
  const auto& base = model_.base();
  for (std::size_t i = 0; i < base.buses.size(); ++i) {
    out.publish(voltage_topic(base.buses[i].id), step, r.solution.v[i]);
  }
  out.publish(kLossesTopic, step, r.solution.total_losses_mw);
  out.publish("signal/grid/v_min", step, r.v_min);
  out.publish("signal/grid/v_max", step, r.v_max);
  out.publish("signal/grid/violations", step, r.violations);
  out.step_done(step);
}

}  // namespace woc::clients
