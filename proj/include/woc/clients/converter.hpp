#pragma once

#include <stdexcept>
#include <vector>

namespace woc::clients {

class DroopError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DroopKnot {
  double u = 1.0;         // pu
  double fraction = 0.0;  // of q_max, +1 injects, -1 absorbs
};

// Piecewise-linear Q = f(U), zero across the deadband, clamped at the ends.
struct DroopCurve {
  std::vector<DroopKnot> knots;
  double dead_lo = 0.98;
  double dead_hi = 1.02;

  static DroopCurve standard();
  // Knots strictly increasing in u, fractions in [-1, 1] and non-increasing,
  // f(dead_lo) >= 0 >= f(dead_hi).
  void validate() const;
  double fraction(double u) const;
};

double qu_droop(double u, const DroopCurve& curve, double q_max_kvar);

struct ConverterState {
  double rated_s_kva = 30.0;
  double q_max_kvar = 15.0;
  double p_peak_kw = 25.0;  // available DC power at irradiance 1
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

struct ConverterOutput {
  double p_kw = 0.0;
  double q_kvar = 0.0;  // generator reference: positive exports
  double p_available_kw = 0.0;
  bool limited = false;
};

// Q from the droop has priority; P is reduced so that sqrt(P^2 + Q^2) <= S.
ConverterOutput converter_step(ConverterState& state, double u, double irradiance, const DroopCurve& curve);

}  // namespace woc::clients
