#include "ropper/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ropper {

namespace {

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#66a182", "#edae49", "#8d6a9f", "#555555"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series) {
  if (series.empty()) throw std::invalid_argument("render_line_chart: no series");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("render_line_chart: ragged series");
    for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
  }
  if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
  if (!(ymax > ymin)) { ymin -= 0.5; ymax += 0.5; }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double W = 640, H = 420;
  const double L = 70, R = 170, T = 40, B = 50;  // margins; right reserves legend space
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + pw * (x - xmin) / (xmax - xmin); };
  auto py = [&](double y) { return T + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << L + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";

  // axes
  out << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
      << "\" stroke=\"black\"/>\n";
  const int nticks = 5;
  for (int i = 0; i <= nticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / nticks;
    const double fy = ymin + (ymax - ymin) * i / nticks;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << T + ph << "\" x2=\"" << px(fx) << "\" y2=\""
        << T + ph + 4 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(fx) << "\" y=\"" << T + ph + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << num(fx) << "</text>\n";
    out << "<line x1=\"" << L - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << L << "\" y2=\"" << py(fy)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(fy) + 3
        << "\" text-anchor=\"end\" font-size=\"10\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << T + ph / 2 << ")\">" << y_label << "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (size_t j = 0; j < s.x.size(); ++j)
      out << (j ? " " : "") << num(px(s.x[j])) << "," << num(py(s.y[j]));
    out << "\"/>\n";
    for (size_t j = 0; j < s.x.size(); ++j)
      out << "<circle cx=\"" << num(px(s.x[j])) << "\" cy=\"" << num(py(s.y[j]))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    const double ly = T + 14 + 18 * static_cast<double>(i);
    out << "<line x1=\"" << L + pw + 14 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 38
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    out << "<text x=\"" << L + pw + 44 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ropper
