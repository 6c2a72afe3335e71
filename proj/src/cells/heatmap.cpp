#include "woc/cells/heatmap.hpp"

#include <filesystem>

#include <spdlog/spdlog.h>

#include "woc/util/svg.hpp"
#include "woc/util/text.hpp"

namespace woc::cells {

std::string heatmap_csv(const DistanceMatrix& d) {
  std::vector<std::string> header{"bus"};
  header.insert(header.end(), d.buses.begin(), d.buses.end());
  std::string out = util::csv_row(header) + "\n";
  for (Eigen::Index i = 0; i < d.d.rows(); ++i) {
    std::vector<std::string> row{d.buses[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < d.d.cols(); ++j) {
      // Avoid "-0" on the diagonal.
      const double v = d.d(i, j) == 0.0 ? 0.0 : d.d(i, j);
      row.push_back(util::format_significant(v, 9));
    }
    out += util::csv_row(row) + "\n";
  }
  return out;
}

HeatmapFiles export_heatmap(const DistanceMatrix& d_norm, const std::string& csv_path) {
  HeatmapFiles files;
  files.csv = csv_path;
  util::write_file(csv_path, heatmap_csv(d_norm));
  files.image = std::filesystem::path(csv_path).replace_extension(".svg").string();
  try {
    util::write_file(files.image,
                     util::svg::heatmap(d_norm.d, d_norm.buses, "Normalized electrical distance"));
  } catch (const std::exception& e) {
    spdlog::warn("heatmap image not written: {}", e.what());
    files.image.clear();
  }
  return files;
}

}  // namespace woc::cells
