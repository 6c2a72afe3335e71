#pragma once

#include <string>

#include "woc/cells/electrical_distance.hpp"

namespace woc::cells {

struct HeatmapFiles {
  std::string csv;
  std::string image;
};

/// CSV matrix dump (first row/column are bus ids, 9 significant digits)
/// plus an SVG color plot next to it. `csv_path` parent directories are
/// created on demand. The CSV is the contract; the image is best-effort.
HeatmapFiles export_heatmap(const DistanceMatrix& d_norm, const std::string& csv_path);

std::string heatmap_csv(const DistanceMatrix& d);

}  // namespace woc::cells
