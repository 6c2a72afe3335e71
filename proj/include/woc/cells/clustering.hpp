#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "woc/cells/electrical_distance.hpp"
#include "woc/grid/network.hpp"

namespace woc::cells {

inline constexpr std::size_t kNoCell = std::numeric_limits<std::size_t>::max();

/// Average-linkage agglomerative clustering of a precomputed dissimilarity
/// matrix, cut at `k` clusters. The matrix is symmetrized with an
/// elementwise max first. Ties merge the pair with the lowest member
/// indices. Labels are numbered by the smallest member index of each
/// cluster.
std::vector<std::size_t> agglomerate_average(const Eigen::MatrixXd& dissimilarity, std::size_t k);

struct CellPartition {
  std::vector<std::string> buses;     // clustered buses, matrix order
  std::vector<std::size_t> cell_of;   // parallel to `buses`
  std::size_t k = 0;
  // Buses outside the matrix (slack, PV) attached to a neighbouring cell.
  std::vector<std::pair<std::string, std::size_t>> attached;
  // Controllable, non-external generators per cell.
  std::vector<std::vector<std::string>> devices;

  std::size_t cell_of_bus(const std::string& bus) const;
  std::vector<std::string> members(std::size_t cell) const;

  /// Throws CellError naming the first cell without a controllable device.
  void validate_for_ppvc() const;
};

CellPartition cluster_cells(const DistanceMatrix& d_norm, std::size_t k, const grid::Network& net);

/// True when every cell's clustered buses induce a connected subgraph.
bool cells_contiguous(const CellPartition& partition, const grid::Network& net);

}  // namespace woc::cells
