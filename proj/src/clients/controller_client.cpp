#include "woc/clients/controller_client.hpp"

#include <fmt/format.h>

#include "woc/ppvc/splitmix.hpp"

namespace woc::clients {

ControllerClient::ControllerClient(StepModel model, cells::CellPartition partition, ControllerOptions options)
    : model_(std::move(model)), partition_(std::move(partition)), options_(std::move(options)) {
  if (options_.cadence == 0) throw std::invalid_argument("controller cadence must be at least 1");
  partition_.validate_for_ppvc();
}

double ControllerClient::global_objective(const grid::PerUnitNetwork& net, double& losses) const {
  powerflow::PowerFlowSolution sol;
  try {
    sol = powerflow::solve_power_flow(net, options_.settings.power_flow);
  } catch (const powerflow::SingularJacobianError&) {
    losses = ppvc::kNonConvergedObjective;
    return ppvc::kNonConvergedObjective;
  }
  if (!sol.converged) {
    losses = ppvc::kNonConvergedObjective;
    return ppvc::kNonConvergedObjective;
  }
  losses = sol.total_losses_mw;
  double penalty = 0.0;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (net.buses[i].kind == grid::BusKind::PQ) penalty += ppvc::band_violation_squared(sol.v[i], options_.settings.band);
  }
  return losses + options_.settings.penalty_weight * penalty;
}

DispatchRecord ControllerClient::dispatch(std::uint64_t step) {
  DispatchRecord rec;
  rec.step = step;
  const auto net = model_.network_at(step, external_, q_);
  auto settings = options_.settings;
  settings.de.seed = ppvc::derive_seed(options_.seed, step);
  const auto cycle = ppvc::run_ppvc_cycle(net, partition_, settings);

  double before = 0.0;
  double after = 0.0;
  const double obj_before = global_objective(net, before);
  QSetpoints trial = q_;
  for (const auto& [id, sp] : cycle.setpoints) trial[id] = sp.q_mvar;
  const double obj_after = global_objective(model_.network_at(step, external_, trial), after);
  rec.losses_before_mw = before;
  rec.accepted = obj_after < obj_before;
  if (rec.accepted) q_ = std::move(trial);
  rec.losses_after_mw = rec.accepted ? after : before;
  history_.push_back(rec);
  return rec;
}

void ControllerClient::on_publish(const bus::BusMessage& msg, bus::Outbox& out) {
  const auto step = msg.step.value_or(0);
  constexpr std::string_view prefix = "signal/converter/";
  if (msg.topic.rfind(prefix, 0) == 0) {
    if (!msg.val.is_number()) return;
    const auto rest = msg.topic.substr(prefix.size());
    const auto slash = rest.find('/');
    if (slash == std::string::npos) return;
    const auto gen = rest.substr(0, slash);
    const auto quantity = rest.substr(slash + 1);
    if (quantity == "p_kw") external_[gen].p_kw = msg.val.get<double>();
    if (quantity == "q_kvar") external_[gen].q_kvar = msg.val.get<double>();
    return;
  }
  if (msg.topic != kLossesTopic || step == 0 || (step - 1) % options_.cadence != 0) return;
  try {
    const auto rec = dispatch(step);
    if (rec.accepted) {
      for (const auto& [id, q] : q_) out.publish(setpoint_topic(id), step, q);
    }
    out.publish("signal/ppvc/losses_before", step, rec.losses_before_mw);
    out.publish("signal/ppvc/losses_after", step, rec.losses_after_mw);
  } catch (const std::exception& e) {
    out.publish("signal/ppvc/diagnostic", step, bus::Json{{"error", e.what()}});
  }
}

}  // namespace woc::clients
