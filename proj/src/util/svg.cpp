#include "woc/util/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace woc::util::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Five-stop approximation of the viridis map.
std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
  const double f = t - static_cast<double>(i);
  std::array<int, 3> rgb{};
  for (std::size_t c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& labels,
                    const std::string& title) {
  const int cell = 24;
  const int margin = 60;
  const auto n = static_cast<int>(values.rows());
  const int width = margin + n * cell + 80;
  const int height = margin + n * cell + 20;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"10\">\n",
      width, height);
  out += fmt::format("<text x=\"{}\" y=\"16\" font-size=\"13\">{}</text>\n", margin, escape(title));
  for (int i = 0; i < n; ++i) {
    const auto& label = i < static_cast<int>(labels.size()) ? labels[static_cast<std::size_t>(i)] : std::string();
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", margin - 4,
                       margin + i * cell + cell / 2 + 4, escape(label));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       margin + i * cell + cell / 2, margin - 6, escape(label));
    for (int j = 0; j < static_cast<int>(values.cols()); ++j) {
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                         margin + j * cell, margin + i * cell, cell, cell, color(values(i, j)));
    }
  }
  const int bar_x = margin + n * cell + 20;
  for (int s = 0; s < 50; ++s) {
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"{:.2f}\" fill=\"{}\"/>\n", bar_x,
                       margin + (49 - s) * n * cell / 50.0, n * cell / 50.0 + 0.5, color(s / 49.0));
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\">1</text>\n", bar_x + 18, margin + 8);
  out += fmt::format("<text x=\"{}\" y=\"{}\">0</text>\n", bar_x + 18, margin + n * cell);
  out += "</svg>\n";
  return out;
}

std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  const double w = 720;
  const double h = 360;
  const double left = 70;
  const double right = 20;
  const double top = 30;
  const double bottom = 40;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t len = 0;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    len = std::max(len, s.values.size());
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    hi = lo + 1.0;
  }
  auto px = [&](std::size_t i) { return left + (w - left - right) * (len > 1 ? double(i) / double(len - 1) : 0.0); };
  auto py = [&](double v) { return top + (h - top - bottom) * (1.0 - (v - lo) / (hi - lo)); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      w, h);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">{}</text>\n", left, escape(title));
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, h - bottom);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, h - bottom, w - right);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4g}</text>\n", left - 4, top + 4, hi);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4g}</text>\n", left - 4, h - bottom, lo);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (left + w - right) / 2, h - 8, escape(x_label));
  out += fmt::format("<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>\n",
                     (top + h - bottom) / 2, (top + h - bottom) / 2, escape(y_label));
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::string points;
    for (std::size_t i = 0; i < series[k].values.size(); ++i) {
      if (!std::isfinite(series[k].values[i])) continue;
      points += fmt::format("{:.1f},{:.1f} ", px(i), py(series[k].values[i]));
    }
    const char* c = kPalette[k % kPalette.size()];
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n", c, points);
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", w - right - 160, top + 14 * (k + 1), c,
                       escape(series[k].label));
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title, const std::string& y_label) {
  const double w = 120.0 + 90.0 * static_cast<double>(values.size());
  const double h = 320;
  const double left = 70;
  const double top = 30;
  const double bottom = 50;
  double hi = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) hi = std::max(hi, v);
  }
  if (hi <= 0.0) hi = 1.0;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      w, h);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">{}</text>\n", left, escape(title));
  out += fmt::format("<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>\n",
                     (top + h - bottom) / 2, (top + h - bottom) / 2, escape(y_label));
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, h - bottom, w - 20);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double bh = (h - top - bottom) * std::max(0.0, values[i]) / hi;
    const double x = left + 20 + 90.0 * static_cast<double>(i);
    out += fmt::format("<rect x=\"{}\" y=\"{:.1f}\" width=\"60\" height=\"{:.1f}\" fill=\"{}\"/>\n", x, h - bottom - bh,
                       bh, kPalette[i % kPalette.size()]);
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.5g}</text>\n", x + 30, h - bottom - bh - 4,
                       values[i]);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x + 30, h - bottom + 16,
                       escape(i < labels.size() ? labels[i] : std::string()));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace woc::util::svg
