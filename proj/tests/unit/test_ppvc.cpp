#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <numeric>

#include "woc/cells/clustering.hpp"
#include "woc/cells/electrical_distance.hpp"
#include "woc/grid/per_unit.hpp"
#include "woc/powerflow/power_flow.hpp"
#include "woc/ppvc/differential_evolution.hpp"
#include "woc/ppvc/ppvc.hpp"
#include "woc/ppvc/splitmix.hpp"

using namespace woc;
using ppvc::Bounds;
using ppvc::DeParams;

namespace {

double sphere(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

cells::CellPartition modified_partition(const grid::Network& net, std::size_t k) {
  auto pu = grid::to_per_unit(net);
  auto sol = powerflow::solve_power_flow(pu);
  return cells::cluster_cells(cells::distance_pipeline(pu, sol).normalized, k, net);
}

}  // namespace

TEST_CASE("SplitMix64 reference values") {
  // first outputs of the reference splitmix64 for seed 0
  ppvc::SplitMix64 g(0);
  CHECK(g.next() == 0xE220A8397B1DCDAFULL);
  CHECK(g.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(g.next() == 0x06C45D188009454FULL);
  ppvc::SplitMix64 h(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = h.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(h.below(5) < 5);
  }
  CHECK(ppvc::derive_seed(1, 0) != ppvc::derive_seed(1, 1));
  CHECK(ppvc::derive_seed(1, 2) == ppvc::derive_seed(1, 2));
}

TEST_CASE("DE minimises the 3-D sphere") {
  Bounds b{{-5, -5, -5}, {5, 5, 5}};
  DeParams p{30, 0.8, 0.9, 200, 0.0, 42};
  auto r = ppvc::differential_evolution(sphere, b, p);
  double norm = std::sqrt(sphere(r.best));
  CHECK(norm < 1e-3);
  CHECK(r.generations <= 200);
  CHECK(r.trajectory.size() == r.generations + 1);
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) CHECK(r.trajectory[i] <= r.trajectory[i - 1]);
  CHECK(b.contains(r.best));
}

TEST_CASE("DE handles a penalised 1-D constraint") {
  // minimise -x subject to x <= 1, box [-3, 3]
  auto obj = [](std::span<const double> x) {
    const double v = std::max(0.0, x[0] - 1.0);
    return -x[0] + 1e4 * v * v;
  };
  auto r = ppvc::differential_evolution(obj, Bounds{{-3}, {3}}, DeParams{30, 0.8, 0.9, 200, 0.0, 3});
  CHECK(std::abs(r.best[0] - 1.0) < 1e-2);
}

TEST_CASE("identical seeds give identical trajectories") {
  Bounds b{{-2, -2}, {2, 2}};
  auto rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  DeParams p{20, 0.7, 0.9, 80, 0.0, 9};
  auto a = ppvc::differential_evolution(rosen, b, p);
  auto c = ppvc::differential_evolution(rosen, b, p);
  CHECK(a.trajectory == c.trajectory);
  CHECK(a.best == c.best);
  p.seed = 10;
  auto d = ppvc::differential_evolution(rosen, b, p);
  CHECK(d.trajectory != a.trajectory);
}

TEST_CASE("tolerance stops early") {
  auto r = ppvc::differential_evolution(sphere, Bounds{{-1}, {1}}, DeParams{10, 0.8, 0.9, 500, 1e-6, 1});
  CHECK(r.converged);
  CHECK(r.generations < 500);
  CHECK(r.evaluations == 10 * (r.generations + 1));
}

TEST_CASE("parameter validation") {
  Bounds b{{0}, {1}};
  CHECK_THROWS_AS(ppvc::differential_evolution(sphere, b, DeParams{3, 0.8, 0.9, 10, 0, 1}), ppvc::DeError);
  CHECK_THROWS_AS(ppvc::differential_evolution(sphere, b, DeParams{10, 0.0, 0.9, 10, 0, 1}), ppvc::DeError);
  CHECK_THROWS_AS(ppvc::differential_evolution(sphere, b, DeParams{10, 0.8, 1.5, 10, 0, 1}), ppvc::DeError);
  CHECK_THROWS_AS(ppvc::differential_evolution(sphere, Bounds{{1}, {0}}, DeParams{}), ppvc::DeError);
  CHECK_THROWS_AS(ppvc::differential_evolution(sphere, Bounds{{0, 0}, {1}}, DeParams{}), ppvc::DeError);
}

TEST_CASE("degenerate box returns its point") {
  auto r = ppvc::differential_evolution(sphere, Bounds{{0.5}, {0.5}}, DeParams{5, 0.8, 0.9, 10, 0, 1});
  CHECK(r.best[0] == 0.5);
}

TEST_CASE("band violation") {
  ppvc::VoltageBand band;
  CHECK(ppvc::band_violation_squared(1.0, band) == 0.0);
  CHECK(ppvc::band_violation_squared(1.06, band) == doctest::Approx(1e-4));
  CHECK(ppvc::band_violation_squared(0.93, band) == doctest::Approx(4e-4));
}

TEST_CASE("two-device cell agrees with a grid search") {
  auto net = testing::benchmark_modified();
  auto part = modified_partition(net, 3);
  auto pu = grid::to_per_unit(net);
  const std::size_t cell = part.cell_of_bus("node4");
  REQUIRE(part.devices[cell] == std::vector<std::string>{"PV04", "PV06"});
  ppvc::PpvcSettings settings;
  settings.de = DeParams{20, 0.7, 0.9, 60, 0.0, 5};
  auto problem = ppvc::make_problem(pu, part, cell, settings);
  CHECK(problem.bounds.lower == std::vector<double>{-0.3, -0.3});
  ppvc::PpvcObjective objective(pu, problem);

  // oracle: solve losses directly on a 61 x 61 grid, then refine around the best cell
  auto direct = [&](double q1, double q2) {
    auto trial = powerflow::apply_setpoints(pu, {{"PV04", {0.3, q1}}, {"PV06", {0.3, q2}}});
    auto sol = powerflow::solve_power_flow(trial);
    REQUIRE(sol.converged);
    return sol.total_losses_mw;
  };
  double best = 1e300, bq1 = 0, bq2 = 0;
  for (int i = 0; i <= 60; ++i) {
    for (int j = 0; j <= 60; ++j) {
      const double q1 = -0.3 + 0.01 * i, q2 = -0.3 + 0.01 * j;
      const double v = direct(q1, q2);
      if (v < best) {
        best = v;
        bq1 = q1;
        bq2 = q2;
      }
    }
  }
  auto r = ppvc::differential_evolution([&](std::span<const double> q) { return objective(q); }, problem.bounds,
                                        settings.de);
  CHECK(r.objective <= best + 1e-9);
  CHECK(std::abs(r.best[0] - bq1) <= 0.011);
  CHECK(std::abs(r.best[1] - bq2) <= 0.011);
  // voltages stay inside the band here, so the objective is the plain loss
  CHECK(objective(std::vector<double>{bq1, bq2}) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("non-converging candidates get the sentinel") {
  auto net = testing::benchmark_modified();
  auto part = modified_partition(net, 3);
  auto pu = grid::to_per_unit(net);
  for (auto& l : pu.loads) l.s *= 60.0;
  ppvc::PpvcSettings settings;
  const std::size_t cell = part.cell_of_bus("node4");
  CHECK(ppvc::ppvc_objective(pu, part, cell, std::vector<double>{0.0, 0.0}, settings) == ppvc::kNonConvergedObjective);
  CHECK_THROWS(ppvc::ppvc_objective(pu, part, cell, std::vector<double>{0.0}, settings));
}

TEST_CASE("a PPVC cycle lowers losses and is deterministic") {
  auto net = testing::benchmark_modified();
  auto part = modified_partition(net, 3);
  auto pu = grid::to_per_unit(net);
  ppvc::PpvcSettings settings;
  auto a = ppvc::run_ppvc_cycle(pu, part, settings);
  auto b = ppvc::run_ppvc_cycle(pu, part, settings);
  CHECK(a.losses_after_mw < a.losses_before_mw);
  CHECK(a.setpoints.size() == 7);
  for (const auto& [id, sp] : a.setpoints) {
    CHECK(sp.q_mvar == b.setpoints.at(id).q_mvar);
    CHECK(sp.p_mw == doctest::Approx(pu.generator(id).s.real() * 100.0));
  }
  CHECK(a.losses_after_mw == b.losses_after_mw);
}
