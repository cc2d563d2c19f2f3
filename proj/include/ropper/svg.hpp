#pragma once

#include <string>
#include <vector>

namespace ropper {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal hand-emitted line chart: axes, ticks, one polyline per series,
// legend. No external renderer.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series);

}  // namespace ropper
