#include "woc/grid/per_unit.hpp"

#include <fmt/format.h>

namespace woc::grid {

std::size_t PerUnitNetwork::bus_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw NetworkError(fmt::format("unknown bus '{}'", id));
  }
  return it->second;
}

const PuGenerator& PerUnitNetwork::generator(const std::string& id) const {
  for (const auto& g : generators) {
    if (g.id == id) return g;
  }
  throw NetworkError(fmt::format("unknown generator '{}'", id));
}

PuGenerator& PerUnitNetwork::generator(const std::string& id) {
  for (auto& g : generators) {
    if (g.id == id) return g;
  }
  throw NetworkError(fmt::format("unknown generator '{}'", id));
}

std::vector<Complex> PerUnitNetwork::scheduled_injections() const {
  std::vector<Complex> s(buses.size());
  for (const auto& g : generators) s[g.bus] += g.s;
  for (const auto& l : loads) s[l.bus] -= l.s;
  return s;
}

PerUnitNetwork to_per_unit(const Network& net) {
  net.validate();
  PerUnitNetwork pu;
  pu.name = net.name;
  pu.base_mva = net.base_mva;
  pu.base_frequency_hz = net.base_frequency_hz;

  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const auto& b = net.buses[i];
    pu.buses.push_back(PuBus{b.id, b.kind, b.nominal_kv, b.v_set.value_or(1.0), b.v_set.has_value()});
    pu.index_.emplace(b.id, i);
    if (b.kind == BusKind::Slack) pu.slack_ = i;
  }
  for (const auto& br : net.branches) {
    PuBranch p;
    p.id = br.id;
    p.from = pu.index_.at(br.from_bus);
    p.to = pu.index_.at(br.to_bus);
    double kv = pu.buses[p.to].nominal_kv;
    p.z_base = kv * kv / net.base_mva;
    p.length_km = br.length_km;
    p.z = Complex(br.r_per_km * br.length_km, br.x_per_km * br.length_km) / p.z_base;
    p.b_shunt = br.b_per_km * br.length_km * p.z_base;
    p.tap_ratio = br.tap_ratio;
    pu.branches.push_back(std::move(p));
  }
  for (const auto& l : net.loads) {
    pu.loads.push_back(PuLoad{l.id, pu.index_.at(l.bus), Complex(l.p_mw, l.q_mvar) / net.base_mva});
  }
  for (const auto& g : net.generators) {
    PuGenerator p;
    p.id = g.id;
    p.bus = pu.index_.at(g.bus);
    p.s = Complex(g.p_mw, g.q_mvar) / net.base_mva;
    p.q_min = g.q_min_mvar / net.base_mva;
    p.q_max = g.q_max_mvar / net.base_mva;
    p.controllable = g.controllable;
    p.external = g.external;
    pu.generators.push_back(std::move(p));
  }
  return pu;
}

Network to_physical(const PerUnitNetwork& pu) {
  Network net;
  net.name = pu.name;
  net.base_mva = pu.base_mva;
  net.base_frequency_hz = pu.base_frequency_hz;
  for (const auto& b : pu.buses) {
    Bus out{b.id, b.kind, b.nominal_kv, std::nullopt};
    if (b.has_v_set) out.v_set = b.v_set;
    net.buses.push_back(std::move(out));
  }
  for (const auto& p : pu.branches) {
    Branch br;
    br.id = p.id;
    br.from_bus = pu.buses[p.from].id;
    br.to_bus = pu.buses[p.to].id;
    br.length_km = p.length_km;
    br.r_per_km = p.z.real() * p.z_base / p.length_km;
    br.x_per_km = p.z.imag() * p.z_base / p.length_km;
    br.b_per_km = p.b_shunt / (p.length_km * p.z_base);
    br.tap_ratio = p.tap_ratio;
    net.branches.push_back(std::move(br));
  }
  for (const auto& l : pu.loads) {
    net.loads.push_back(Load{l.id, pu.buses[l.bus].id, l.s.real() * pu.base_mva, l.s.imag() * pu.base_mva});
  }
  for (const auto& g : pu.generators) {
    net.generators.push_back(Generator{g.id, pu.buses[g.bus].id, g.s.real() * pu.base_mva,
                                       g.s.imag() * pu.base_mva, g.q_min * pu.base_mva,
                                       g.q_max * pu.base_mva, g.controllable, g.external});
  }
  return net;
}

Eigen::MatrixXcd admittance_matrix(const PerUnitNetwork& net) {
  const auto n = static_cast<Eigen::Index>(net.bus_count());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : net.branches) {
    const Complex ys = 1.0 / br.z;
    const Complex ysh(0.0, br.b_shunt / 2.0);
    const double t = br.tap_ratio;
    const auto f = static_cast<Eigen::Index>(br.from);
    const auto k = static_cast<Eigen::Index>(br.to);
    y(f, f) += (ys + ysh) / (t * t);
    y(k, k) += ys + ysh;
    y(f, k) -= ys / t;
    y(k, f) -= ys / t;
  }
  return y;
}

}  // namespace woc::grid
