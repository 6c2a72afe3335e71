#include "woc/cells/clustering.hpp"

#include <algorithm>
#include <complex>
#include <map>
#include <set>

#include <fmt/format.h>

namespace woc::cells {

std::vector<std::size_t> agglomerate_average(const Eigen::MatrixXd& dissimilarity, std::size_t k) {
  const auto n = static_cast<std::size_t>(dissimilarity.rows());
  if (dissimilarity.rows() != dissimilarity.cols()) {
    throw CellError("dissimilarity matrix must be square");
  }
  if (k == 0) {
    throw CellError("cell count must be at least 1");
  }
  if (k > n) {
    throw CellError(fmt::format("cell count {} exceeds bus count {}", k, n));
  }

  Eigen::MatrixXd d = dissimilarity.cwiseMax(dissimilarity.transpose());
  // Cluster c is represented by its smallest member index c; `active[c]`
  // says whether that cluster still exists.
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[i] = i;

  for (std::size_t clusters = n; clusters > k; --clusters) {
    std::size_t best_a = n;
    std::size_t best_b = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double v = d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (v < best || best_a == n) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    }
    // Lance-Williams update for average linkage; result lives at best_a.
    const double wa = static_cast<double>(size[best_a]);
    const double wb = static_cast<double>(size[best_b]);
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == best_a || c == best_b) continue;
      const auto ia = static_cast<Eigen::Index>(best_a);
      const auto ib = static_cast<Eigen::Index>(best_b);
      const auto ic = static_cast<Eigen::Index>(c);
      const double merged = (wa * d(ia, ic) + wb * d(ib, ic)) / (wa + wb);
      d(ia, ic) = merged;
      d(ic, ia) = merged;
    }
    size[best_a] += size[best_b];
    active[best_b] = false;
    for (auto& o : owner) {
      if (o == best_b) o = best_a;
    }
  }

  std::map<std::size_t, std::size_t> label_of_root;
  for (std::size_t i = 0; i < n; ++i) {
    if (!label_of_root.count(owner[i])) {
      const auto next = label_of_root.size();
      label_of_root[owner[i]] = next;
    }
  }
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = label_of_root[owner[i]];
  return labels;
}

std::size_t CellPartition::cell_of_bus(const std::string& bus) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i] == bus) return cell_of[i];
  }
  for (const auto& [id, cell] : attached) {
    if (id == bus) return cell;
  }
  return kNoCell;
}

std::vector<std::string> CellPartition::members(std::size_t cell) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (cell_of[i] == cell) out.push_back(buses[i]);
  }
  return out;
}

void CellPartition::validate_for_ppvc() const {
  for (std::size_t c = 0; c < k; ++c) {
    if (c >= devices.size() || devices[c].empty()) {
      throw CellError(fmt::format("cell {} has no controllable device", c + 1));
    }
  }
}

CellPartition cluster_cells(const DistanceMatrix& d_norm, std::size_t k, const grid::Network& net) {
  CellPartition p;
  p.buses = d_norm.buses;
  p.k = k;
  p.cell_of = agglomerate_average(d_norm.d, k);

  std::set<std::string> clustered(p.buses.begin(), p.buses.end());
  for (const auto& bus : net.buses) {
    if (clustered.count(bus.id)) continue;
    // Nearest electrically connected clustered neighbour by |z| in pu.
    std::size_t best_cell = kNoCell;
    double best_z = std::numeric_limits<double>::infinity();
    std::size_t best_index = std::numeric_limits<std::size_t>::max();
    for (const auto& br : net.branches) {
      std::string other;
      if (br.from_bus == bus.id) other = br.to_bus;
      else if (br.to_bus == bus.id) other = br.from_bus;
      else continue;
      if (!clustered.count(other)) continue;
      const double kv = net.find_bus(br.to_bus)->nominal_kv;
      const double z = std::abs(std::complex<double>(br.r_per_km, br.x_per_km)) * br.length_km /
                       (kv * kv / net.base_mva);
      const auto idx = net.bus_index(other);
      if (z < best_z || (z == best_z && idx < best_index)) {
        best_z = z;
        best_index = idx;
        best_cell = p.cell_of_bus(other);
      }
    }
    p.attached.emplace_back(bus.id, best_cell);
  }

  p.devices.assign(k, {});
  for (const auto& g : net.generators) {
    if (!g.controllable || g.external) continue;
    const auto cell = p.cell_of_bus(g.bus);
    if (cell != kNoCell) p.devices[cell].push_back(g.id);
  }
  return p;
}

bool cells_contiguous(const CellPartition& partition, const grid::Network& net) {
  for (std::size_t c = 0; c < partition.k; ++c) {
    const auto members = partition.members(c);
    if (members.empty()) return false;
    std::set<std::string> in_cell(members.begin(), members.end());
    std::set<std::string> seen{members.front()};
    std::vector<std::string> frontier{members.front()};
    while (!frontier.empty()) {
      const auto bus = frontier.back();
      frontier.pop_back();
      for (const auto& br : net.branches) {
        std::string other;
        if (br.from_bus == bus) other = br.to_bus;
        else if (br.to_bus == bus) other = br.from_bus;
        else continue;
        if (in_cell.count(other) && seen.insert(other).second) frontier.push_back(other);
      }
    }
    if (seen.size() != in_cell.size()) return false;
  }
  return true;
}

}  // namespace woc::cells
