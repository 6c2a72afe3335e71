#include "woc/powerflow/power_flow.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace woc::powerflow {

using grid::BusKind;

SingularJacobianError::SingularJacobianError(int iteration, double rcond)
    : std::runtime_error(
          fmt::format("singular Jacobian at iteration {} (rcond estimate {:.3g})", iteration, rcond)),
      iteration_(iteration),
      rcond_(rcond) {}

Eigen::MatrixXd Jacobian::full() const {
  const auto a = j1.rows();
  const auto b = j4.rows();
  Eigen::MatrixXd j(a + b, a + b);
  j << j1, j2, j3, j4;
  return j;
}

namespace {

Eigen::VectorXcd phasors(const std::vector<double>& v, const std::vector<double>& delta) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = std::polar(v[i], delta[i]);
  }
  return out;
}

void classify(const PerUnitNetwork& net, std::vector<std::size_t>& pvpq, std::vector<std::size_t>& pq) {
  pvpq.clear();
  pq.clear();
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    if (net.buses[i].kind == BusKind::Slack) continue;
    pvpq.push_back(i);
    if (net.buses[i].kind == BusKind::PQ) pq.push_back(i);
  }
}

constexpr double kSingularRcond = 1e-14;

}  // namespace

std::vector<Complex> bus_power(const Eigen::MatrixXcd& y, const std::vector<double>& v,
                               const std::vector<double>& delta) {
  const Eigen::VectorXcd vc = phasors(v, delta);
  const Eigen::VectorXcd i = y * vc;
  std::vector<Complex> s(v.size());
  for (Eigen::Index k = 0; k < vc.size(); ++k) {
    s[static_cast<std::size_t>(k)] = vc(k) * std::conj(i(k));
  }
  return s;
}

Jacobian jacobian(const Eigen::MatrixXcd& y, const PerUnitNetwork& net,
                  const std::vector<double>& v, const std::vector<double>& delta) {
  Jacobian jac;
  classify(net, jac.pvpq, jac.pq);

  const Eigen::VectorXcd vc = phasors(v, delta);
  const Eigen::VectorXcd ibus = y * vc;
  const auto n = vc.size();
  Eigen::VectorXcd vnorm(n);
  for (Eigen::Index k = 0; k < n; ++k) vnorm(k) = vc(k) / std::abs(vc(k));

  // dS/d(delta) = j diag(V) conj(diag(I) - Y diag(V))
  // dS/dv       = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
  Eigen::MatrixXcd ds_da = -(y * vc.asDiagonal()).conjugate();
  ds_da.diagonal() += ibus.conjugate();
  ds_da = (Complex(0.0, 1.0) * vc).asDiagonal() * ds_da;
  Eigen::MatrixXcd ds_dv = vc.asDiagonal() * (y * vnorm.asDiagonal()).conjugate();
  ds_dv.diagonal() += ibus.conjugate().cwiseProduct(vnorm);

  const auto np = static_cast<Eigen::Index>(jac.pvpq.size());
  const auto nq = static_cast<Eigen::Index>(jac.pq.size());
  jac.j1.resize(np, np);
  jac.j2.resize(np, nq);
  jac.j3.resize(nq, np);
  jac.j4.resize(nq, nq);
  for (Eigen::Index r = 0; r < np; ++r) {
    const auto i = static_cast<Eigen::Index>(jac.pvpq[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < np; ++c) {
      jac.j1(r, c) = ds_da(i, static_cast<Eigen::Index>(jac.pvpq[static_cast<std::size_t>(c)])).real();
    }
    for (Eigen::Index c = 0; c < nq; ++c) {
      jac.j2(r, c) = ds_dv(i, static_cast<Eigen::Index>(jac.pq[static_cast<std::size_t>(c)])).real();
    }
  }
  for (Eigen::Index r = 0; r < nq; ++r) {
    const auto i = static_cast<Eigen::Index>(jac.pq[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < np; ++c) {
      jac.j3(r, c) = ds_da(i, static_cast<Eigen::Index>(jac.pvpq[static_cast<std::size_t>(c)])).imag();
    }
    for (Eigen::Index c = 0; c < nq; ++c) {
      jac.j4(r, c) = ds_dv(i, static_cast<Eigen::Index>(jac.pq[static_cast<std::size_t>(c)])).imag();
    }
  }
  return jac;
}

Jacobian jacobian(const PerUnitNetwork& net, const std::vector<double>& v,
                  const std::vector<double>& delta) {
  return jacobian(grid::admittance_matrix(net), net, v, delta);
}

namespace {

void fill_outputs(const PerUnitNetwork& net, const Eigen::MatrixXcd& y, PowerFlowSolution& sol) {
  const auto s = bus_power(y, sol.v, sol.delta);
  sol.p_inj.resize(s.size());
  sol.q_inj.resize(s.size());
  double p_total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sol.p_inj[i] = s[i].real();
    sol.q_inj[i] = s[i].imag();
    p_total += s[i].real();
  }
  sol.total_losses_mw = p_total * net.base_mva;

  sol.branch_flows.clear();
  for (const auto& br : net.branches) {
    const Complex vf = std::polar(sol.v[br.from], sol.delta[br.from]);
    const Complex vt = std::polar(sol.v[br.to], sol.delta[br.to]);
    const Complex ys = 1.0 / br.z;
    const Complex ysh(0.0, br.b_shunt / 2.0);
    const double t = br.tap_ratio;
    const Complex i_f = (ys + ysh) / (t * t) * vf - ys / t * vt;
    const Complex i_t = -ys / t * vf + (ys + ysh) * vt;
    sol.branch_flows.push_back(BranchFlow{vf * std::conj(i_f), vt * std::conj(i_t)});
  }

  for (const auto& g : net.generators) {
    if (net.buses[g.bus].kind != BusKind::PV) continue;
    double q_load = 0.0;
    for (const auto& l : net.loads) {
      if (l.bus == g.bus) q_load += l.s.imag();
    }
    const double q_gen = sol.q_inj[g.bus] + q_load;
    if (q_gen > g.q_max + 1e-12 || q_gen < g.q_min - 1e-12) {
      spdlog::warn("generator '{}' reactive output {:.6g} MVAr outside [{:.6g}, {:.6g}]; clamped for reporting",
                   g.id, q_gen * net.base_mva, g.q_min * net.base_mva, g.q_max * net.base_mva);
    }
  }
}

}  // namespace

PowerFlowSolution solve_power_flow(const PerUnitNetwork& net, const SolveOptions& options) {
  if (!(options.tolerance > 0.0)) {
    throw PowerFlowError("power flow tolerance must be positive");
  }
  const auto n = net.bus_count();
  const Eigen::MatrixXcd y = grid::admittance_matrix(net);
  const auto sched = net.scheduled_injections();

  PowerFlowSolution sol;
  sol.base_mva = net.base_mva;
  if (options.warm_start) {
    if (options.warm_start->v.size() != n || options.warm_start->delta.size() != n) {
      throw PowerFlowError("warm start dimension does not match the network");
    }
    sol.v = options.warm_start->v;
    sol.delta = options.warm_start->delta;
  } else {
    sol.v.assign(n, 1.0);
    sol.delta.assign(n, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (net.buses[i].kind != BusKind::PQ) sol.v[i] = net.buses[i].v_set;
  }
  sol.delta[net.slack()] = options.warm_start ? sol.delta[net.slack()] : 0.0;

  std::vector<std::size_t> pvpq;
  std::vector<std::size_t> pq;
  classify(net, pvpq, pq);
  const auto np = static_cast<Eigen::Index>(pvpq.size());
  const auto nq = static_cast<Eigen::Index>(pq.size());
  Eigen::VectorXd mismatch(np + nq);

  for (int it = 1; it <= options.max_iterations; ++it) {
    sol.iterations = it;
    const auto s = bus_power(y, sol.v, sol.delta);
    for (Eigen::Index r = 0; r < np; ++r) {
      const auto i = pvpq[static_cast<std::size_t>(r)];
      mismatch(r) = s[i].real() - sched[i].real();
    }
    for (Eigen::Index r = 0; r < nq; ++r) {
      const auto i = pq[static_cast<std::size_t>(r)];
      mismatch(np + r) = s[i].imag() - sched[i].imag();
    }
    sol.max_mismatch = mismatch.size() > 0 ? mismatch.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(sol.max_mismatch)) {
      sol.collapsed = true;
      break;
    }
    if (sol.max_mismatch <= options.tolerance) {
      sol.converged = true;
      break;
    }
    if (it == options.max_iterations) {
      break;
    }

    const Eigen::MatrixXd jac = jacobian(y, net, sol.v, sol.delta).full();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    // Eigen's estimate assumes an invertible matrix; a zero pivot slips through it
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    const double pivot_ratio = pivots.size() > 0 ? pivots.minCoeff() / pivots.maxCoeff() : 1.0;
    const double rcond = std::min(lu.rcond(), pivot_ratio);
    if (!(rcond > kSingularRcond)) {
      if (it == 1) {
        throw SingularJacobianError(it, rcond);
      }
      spdlog::debug("power flow: singular Jacobian at iteration {}, treating as collapse", it);
      sol.collapsed = true;
      break;
    }
    const Eigen::VectorXd dx = lu.solve(-mismatch);
    for (Eigen::Index r = 0; r < np; ++r) sol.delta[pvpq[static_cast<std::size_t>(r)]] += dx(r);
    for (Eigen::Index r = 0; r < nq; ++r) sol.v[pq[static_cast<std::size_t>(r)]] += dx(np + r);

    const bool physical = std::all_of(sol.v.begin(), sol.v.end(),
                                      [](double x) { return std::isfinite(x) && x > 0.0; });
    if (!physical) {
      sol.collapsed = true;
      break;
    }
  }

  if (sol.collapsed) {
    sol.converged = false;
    return sol;
  }
  fill_outputs(net, y, sol);
  return sol;
}

PerUnitNetwork apply_setpoints(const PerUnitNetwork& net, const Setpoints& setpoints) {
  PerUnitNetwork out = net;
  for (const auto& [id, sp] : setpoints) {
    auto it = std::find_if(out.generators.begin(), out.generators.end(),
                           [&](const grid::PuGenerator& g) { return g.id == id; });
    if (it == out.generators.end()) {
      throw SetpointError(fmt::format("unknown generator '{}'", id));
    }
    const double q_min = it->q_min * net.base_mva;
    const double q_max = it->q_max * net.base_mva;
    const double slack = 1e-9 * std::max(1.0, std::abs(q_max - q_min));
    if (!std::isfinite(sp.q_mvar) || !std::isfinite(sp.p_mw)) {
      throw SetpointError(fmt::format("generator '{}': non-finite setpoint", id));
    }
    if (sp.q_mvar > q_max + slack) {
      throw SetpointError(fmt::format("generator '{}': q {} MVAr exceeds q_max {} MVAr", id, sp.q_mvar, q_max));
    }
    if (sp.q_mvar < q_min - slack) {
      throw SetpointError(fmt::format("generator '{}': q {} MVAr below q_min {} MVAr", id, sp.q_mvar, q_min));
    }
    it->s = Complex(sp.p_mw, sp.q_mvar) / net.base_mva;
  }
  return out;
}

double total_losses(const PowerFlowSolution& sol) {
  if (!sol.converged) {
    throw PowerFlowError("losses requested for a non-converged power flow");
  }
  return sol.total_losses_mw;
}

double branch_losses_mw(const PowerFlowSolution& sol) {
  if (!sol.converged) {
    throw PowerFlowError("losses requested for a non-converged power flow");
  }
  double p = 0.0;
  for (const auto& f : sol.branch_flows) p += (f.s_from + f.s_to).real();
  return p * sol.base_mva;
}

}  // namespace woc::powerflow
