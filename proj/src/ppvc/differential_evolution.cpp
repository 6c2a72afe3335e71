#include "woc/ppvc/differential_evolution.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "woc/ppvc/splitmix.hpp"

namespace woc::ppvc {

void DeParams::validate() const {
  if (population < 4) {
    throw DeError(fmt::format("population must be >= 4, got {}", population));
  }
  if (!(mutation > 0.0 && mutation <= 2.0)) {
    throw DeError(fmt::format("mutation factor F must be in (0, 2], got {}", mutation));
  }
  if (!(crossover >= 0.0 && crossover <= 1.0)) {
    throw DeError(fmt::format("crossover rate CR must be in [0, 1], got {}", crossover));
  }
  if (!(tolerance >= 0.0)) {
    throw DeError("tolerance must be non-negative");
  }
}

bool Bounds::contains(std::span<const double> x) const noexcept {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

void Bounds::validate() const {
  if (lower.empty() || lower.size() != upper.size()) {
    throw DeError("bounds must be non-empty with matching lower/upper sizes");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw DeError(fmt::format("invalid bounds [{}, {}] for variable {}", lower[i], upper[i], i));
    }
  }
}

DispatchResult differential_evolution(const Objective& objective, const Bounds& bounds,
                                      const DeParams& params) {
  params.validate();
  bounds.validate();
  const std::size_t np = params.population;
  const std::size_t dim = bounds.dimension();
  SplitMix64 rng(params.seed);

  DispatchResult result;
  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  std::vector<double> cost(np);
  for (auto& x : pop) {
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = bounds.lower[j] + rng.uniform() * (bounds.upper[j] - bounds.lower[j]);
      x[j] = std::clamp(x[j], bounds.lower[j], bounds.upper[j]);
    }
  }
  for (std::size_t i = 0; i < np; ++i) {
    cost[i] = objective(pop[i]);
    ++result.evaluations;
  }

  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
  };
  auto spread = [&] {
    auto [lo, hi] = std::minmax_element(cost.begin(), cost.end());
    return *hi - *lo;
  };
  result.trajectory.push_back(cost[best_index()]);

  std::vector<double> trial(dim);
  if (spread() < params.tolerance) {
    result.converged = true;
  }
  while (!result.converged && result.generations < params.max_generations) {
    ++result.generations;
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1 = 0;
      std::size_t r2 = 0;
      std::size_t r3 = 0;
      do r1 = rng.below(np); while (r1 == i);
      do r2 = rng.below(np); while (r2 == i || r2 == r1);
      do r3 = rng.below(np); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = rng.below(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        const bool take_mutant = j == forced || rng.uniform() < params.crossover;
        if (take_mutant) {
          const double m = pop[r1][j] + params.mutation * (pop[r2][j] - pop[r3][j]);
          trial[j] = std::clamp(m, bounds.lower[j], bounds.upper[j]);
        } else {
          trial[j] = pop[i][j];
        }
      }
      const double c = objective(trial);
      ++result.evaluations;
      if (c <= cost[i]) {
        pop[i] = trial;
        cost[i] = c;
      }
    }
    result.trajectory.push_back(cost[best_index()]);
    if (spread() < params.tolerance) {
      result.converged = true;
    }
  }

  const auto b = best_index();
  result.best = pop[b];
  result.objective = cost[b];
  return result;
}

}  // namespace woc::ppvc
