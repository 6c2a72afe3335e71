#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace woc::ppvc {

class DeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DeParams {
  std::size_t population = 30;
  double mutation = 0.8;   // F
  double crossover = 0.9;  // CR
  std::size_t max_generations = 200;
  // Stop once max - min of the population objectives drops below this.
  double tolerance = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x) const noexcept;
  void validate() const;
};

struct DispatchResult {
  std::vector<double> best;
  double objective = 0.0;
  std::size_t generations = 0;
  bool converged = false;
  std::size_t evaluations = 0;
  // Best objective after initialisation and after every generation.
  std::vector<double> trajectory;
};

using Objective = std::function<double(std::span<const double>)>;

/// DE/rand/1/bin with box clipping and greedy (<=) replacement.
/// Deterministic for a given seed; evaluation order is fixed, so the
/// objective may be stateful (e.g. record the points it sees).
DispatchResult differential_evolution(const Objective& objective, const Bounds& bounds,
                                      const DeParams& params);

}  // namespace woc::ppvc
