#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace woc::util::svg {

struct Series {
  std::string label;
  std::vector<double> values;
};

/// Matrix color plot; values are expected in [0, 1].
std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& labels,
                    const std::string& title);

std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title, const std::string& y_label);

}  // namespace woc::util::svg
