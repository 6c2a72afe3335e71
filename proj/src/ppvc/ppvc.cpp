#include "woc/ppvc/ppvc.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>

#include "woc/ppvc/splitmix.hpp"

namespace woc::ppvc {

using powerflow::Setpoint;
using powerflow::Setpoints;

PpvcProblem make_problem(const grid::PerUnitNetwork& net, const cells::CellPartition& partition,
                         std::size_t cell, const PpvcSettings& settings) {
  if (cell >= partition.k) {
    throw cells::CellError(fmt::format("unknown cell {} (partition has {})", cell + 1, partition.k));
  }
  if (cell >= partition.devices.size() || partition.devices[cell].empty()) {
    throw cells::CellError(fmt::format("cell {} has no controllable device", cell + 1));
  }
  if (!(settings.band.lo < settings.band.hi)) {
    throw DeError("voltage band requires v_lo < v_hi");
  }
  PpvcProblem p;
  p.cell = cell;
  p.devices = partition.devices[cell];
  p.band = settings.band;
  p.penalty_weight = settings.penalty_weight;
  for (const auto& id : p.devices) {
    const auto& g = net.generator(id);
    p.bounds.lower.push_back(g.q_min * net.base_mva);
    p.bounds.upper.push_back(g.q_max * net.base_mva);
  }
  for (const auto& bus : partition.members(cell)) {
    const auto idx = net.bus_index(bus);
    if (net.buses[idx].kind == grid::BusKind::PQ) p.monitored_buses.push_back(idx);
  }
  return p;
}

double band_violation_squared(double v, const VoltageBand& band) {
  const double excess = std::max({0.0, v - band.hi, band.lo - v});
  return excess * excess;
}

PpvcObjective::PpvcObjective(grid::PerUnitNetwork net, PpvcProblem problem, powerflow::SolveOptions options)
    : net_(std::move(net)), problem_(std::move(problem)), options_(std::move(options)) {}

double PpvcObjective::operator()(std::span<const double> candidate_q) const {
  if (candidate_q.size() != problem_.devices.size()) {
    throw DeError("candidate dimension does not match the cell's devices");
  }
  Setpoints sp;
  for (std::size_t i = 0; i < candidate_q.size(); ++i) {
    const auto& g = net_.generator(problem_.devices[i]);
    sp[problem_.devices[i]] = Setpoint{g.s.real() * net_.base_mva, candidate_q[i]};
  }
  const auto trial = powerflow::apply_setpoints(net_, sp);
  powerflow::PowerFlowSolution sol;
  try {
    sol = powerflow::solve_power_flow(trial, options_);
  } catch (const powerflow::SingularJacobianError&) {
    return kNonConvergedObjective;
  }
  if (!sol.converged) {
    return kNonConvergedObjective;
  }
  double penalty = 0.0;
  for (auto idx : problem_.monitored_buses) penalty += band_violation_squared(sol.v[idx], problem_.band);
  return sol.total_losses_mw + problem_.penalty_weight * penalty;
}

double ppvc_objective(const grid::PerUnitNetwork& net, const cells::CellPartition& partition,
                      std::size_t cell, std::span<const double> candidate_q, const PpvcSettings& settings) {
  PpvcObjective objective(net, make_problem(net, partition, cell, settings), settings.power_flow);
  return objective(candidate_q);
}

PpvcCycleResult run_ppvc_cycle(const grid::PerUnitNetwork& net, const cells::CellPartition& partition,
                               const PpvcSettings& settings) {
  partition.validate_for_ppvc();
  PpvcCycleResult out;

  const auto before = powerflow::solve_power_flow(net, settings.power_flow);
  out.losses_before_mw = before.converged ? before.total_losses_mw : kNonConvergedObjective;
  powerflow::SolveOptions warm = settings.power_flow;
  if (before.converged) warm.warm_start = before.operating_point();

  std::vector<std::future<DispatchResult>> jobs;
  std::vector<PpvcProblem> problems;
  for (std::size_t c = 0; c < partition.k; ++c) {
    problems.push_back(make_problem(net, partition, c, settings));
  }
  for (std::size_t c = 0; c < partition.k; ++c) {
    jobs.push_back(std::async(std::launch::async, [&, c] {
      PpvcObjective objective(net, problems[c], warm);
      DeParams de = settings.de;
      de.seed = derive_seed(settings.de.seed, c);
      return differential_evolution([&](std::span<const double> q) { return objective(q); },
                                    problems[c].bounds, de);
    }));
  }
  for (std::size_t c = 0; c < partition.k; ++c) {
    out.per_cell.push_back(jobs[c].get());
    const auto& result = out.per_cell.back();
    for (std::size_t i = 0; i < problems[c].devices.size(); ++i) {
      const auto& g = net.generator(problems[c].devices[i]);
      out.setpoints[problems[c].devices[i]] = Setpoint{g.s.real() * net.base_mva, result.best[i]};
    }
  }

  const auto after = powerflow::solve_power_flow(powerflow::apply_setpoints(net, out.setpoints), warm);
  out.losses_after_mw = after.converged ? after.total_losses_mw : kNonConvergedObjective;
  return out;
}

}  // namespace woc::ppvc
