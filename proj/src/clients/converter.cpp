#include "woc/clients/converter.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace woc::clients {

DroopCurve DroopCurve::standard() {
  return DroopCurve{{{0.95, 1.0}, {0.98, 0.0}, {1.02, 0.0}, {1.05, -1.0}}, 0.98, 1.02};
}

namespace {

double interpolate(const std::vector<DroopKnot>& knots, double u) {
  if (u <= knots.front().u) return knots.front().fraction;
  if (u >= knots.back().u) return knots.back().fraction;
  auto hi = std::upper_bound(knots.begin(), knots.end(), u, [](double x, const DroopKnot& k) { return x < k.u; });
  auto lo = hi - 1;
  const double t = (u - lo->u) / (hi->u - lo->u);
  return lo->fraction + t * (hi->fraction - lo->fraction);
}

}  // namespace

void DroopCurve::validate() const {
  if (knots.size() < 2) throw DroopError("droop curve needs at least two knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto& k = knots[i];
    if (!std::isfinite(k.u) || !std::isfinite(k.fraction) || k.u <= 0.0) {
      throw DroopError(fmt::format("droop knot {} is not finite and positive", i + 1));
    }
    if (k.fraction < -1.0 || k.fraction > 1.0) throw DroopError(fmt::format("droop knot {} fraction outside [-1, 1]", i + 1));
    if (i > 0 && !(k.u > knots[i - 1].u)) throw DroopError("droop knots must be strictly increasing in voltage");
    if (i > 0 && k.fraction > knots[i - 1].fraction) throw DroopError("droop curve must be non-increasing");
  }
  if (!(dead_lo <= dead_hi)) throw DroopError("deadband lower bound above upper bound");
  if (interpolate(knots, dead_lo) < 0.0 || interpolate(knots, dead_hi) > 0.0) {
    throw DroopError("deadband must separate injecting and absorbing parts of the curve");
  }
}

double DroopCurve::fraction(double u) const {
  if (u >= dead_lo && u <= dead_hi) return 0.0;
  return interpolate(knots, u);
}

double qu_droop(double u, const DroopCurve& curve, double q_max_kvar) { return curve.fraction(u) * q_max_kvar; }

ConverterOutput converter_step(ConverterState& state, double u, double irradiance, const DroopCurve& curve) {
  ConverterOutput out;
  const double s = state.rated_s_kva;
  out.p_available_kw = std::min(std::max(irradiance, 0.0) * state.p_peak_kw, s);
  out.q_kvar = std::clamp(qu_droop(u, curve, state.q_max_kvar), -s, s);
  const double p_room = std::sqrt(std::max(s * s - out.q_kvar * out.q_kvar, 0.0));
  out.p_kw = std::max(std::min(out.p_available_kw, p_room), 0.0);
  out.limited = out.p_kw < out.p_available_kw;
  state.p_kw = out.p_kw;
  state.q_kvar = out.q_kvar;
  return out;
}

}  // namespace woc::clients
