#pragma once

#include <string>
#include <vector>

#include "woc/cells/clustering.hpp"
#include "woc/grid/per_unit.hpp"
#include "woc/powerflow/power_flow.hpp"
#include "woc/ppvc/differential_evolution.hpp"

namespace woc::ppvc {

struct VoltageBand {
  double lo = 0.95;
  double hi = 1.05;
};

/// Returned by the objective when the power flow does not converge.
inline constexpr double kNonConvergedObjective = 1e9;

struct PpvcSettings {
  VoltageBand band;
  double penalty_weight = 1e4;  // MW per pu^2
  DeParams de{20, 0.7, 0.9, 60, 1e-9, 1};
  powerflow::SolveOptions power_flow;
};

/// One cell's optimisation problem: reactive setpoints (MVAr) of the
/// cell's controllable devices.
struct PpvcProblem {
  std::size_t cell = 0;
  std::vector<std::string> devices;
  Bounds bounds;
  VoltageBand band;
  double penalty_weight = 1e4;
  std::vector<std::size_t> monitored_buses;  // per-unit network indices
};

PpvcProblem make_problem(const grid::PerUnitNetwork& net, const cells::CellPartition& partition,
                         std::size_t cell, const PpvcSettings& settings);

/// Losses (MW) plus penalty_weight * sum over the cell's buses of the
/// squared band violation. Reentrant: every call works on its own copy.
class PpvcObjective {
 public:
  PpvcObjective(grid::PerUnitNetwork net, PpvcProblem problem, powerflow::SolveOptions options = {});

  double operator()(std::span<const double> candidate_q) const;
  const PpvcProblem& problem() const noexcept { return problem_; }

 private:
  grid::PerUnitNetwork net_;
  PpvcProblem problem_;
  powerflow::SolveOptions options_;
};

double ppvc_objective(const grid::PerUnitNetwork& net, const cells::CellPartition& partition,
                      std::size_t cell, std::span<const double> candidate_q,
                      const PpvcSettings& settings = {});

/// Squared band violation of one voltage.
double band_violation_squared(double v, const VoltageBand& band);

struct PpvcCycleResult {
  powerflow::Setpoints setpoints;  // all cells, p unchanged
  std::vector<DispatchResult> per_cell;
  double losses_before_mw = 0.0;
  double losses_after_mw = 0.0;
};

/// Optimises every cell independently against `net` (the current state,
/// other cells' devices frozen at their present setpoints) and returns the
/// concatenated dispatch. Cells run concurrently; each uses the seed
/// derive_seed(settings.de.seed, cell).
PpvcCycleResult run_ppvc_cycle(const grid::PerUnitNetwork& net, const cells::CellPartition& partition,
                               const PpvcSettings& settings);

}  // namespace woc::ppvc
