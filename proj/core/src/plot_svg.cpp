#include "cgrp/plot_svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cgrp/tensor.hpp"

namespace cgrp {
namespace {

const char* kPalette[] = {"#4472c4", "#ed7d31", "#70ad47", "#ffc000", "#5b9bd5", "#a5a5a5"};
constexpr int kNColors = 6;

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string val(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, y0, x1, y1;  // plot rectangle in svg coordinates
  double vmin, vmax;      // value range mapped onto the y axis

  double y_of(double v) const { return y1 - (v - vmin) / (vmax - vmin) * (y1 - y0); }
};

void value_range(const std::vector<ChartSeries>& series, double& vmin, double& vmax) {
  vmin = 0.0;
  vmax = 0.0;
  bool any = false;
  for (const auto& s : series)
    for (double v : s.values) {
      if (std::isnan(v)) continue;
      vmin = any ? std::min(vmin, v) : std::min(0.0, v);
      vmax = any ? std::max(vmax, v) : std::max(0.0, v);
      any = true;
    }
  if (!any || vmax == vmin) vmax = vmin + 1.0;
  vmax += (vmax - vmin) * 0.05;
}

void open_svg(std::ostringstream& svg, const std::string& title, int width, int height) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << esc(title) << "</text>\n";
}

void draw_axes(std::ostringstream& svg, const Frame& f) {
  svg << "<line x1=\"" << num(f.x0) << "\" y1=\"" << num(f.y0) << "\" x2=\"" << num(f.x0)
      << "\" y2=\"" << num(f.y1) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << num(f.x0) << "\" y1=\"" << num(f.y1) << "\" x2=\"" << num(f.x1)
      << "\" y2=\"" << num(f.y1) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double v = f.vmin + (f.vmax - f.vmin) * t / 4.0;
    double y = f.y_of(v);
    svg << "<line x1=\"" << num(f.x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(f.x1)
        << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << num(f.x0 - 8) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << val(v)
        << "</text>\n";
  }
}

void draw_legend(std::ostringstream& svg, const std::vector<ChartSeries>& series, const Frame& f) {
  if (series.size() < 2) return;
  double y = f.y0 - 6;
  double x = f.x0;
  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kNColors];
    svg << "<rect x=\"" << num(x) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n"
        << "<text x=\"" << num(x + 14) << "\" y=\"" << num(y)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(series[s].name) << "</text>\n";
    x += 24 + 7.0 * static_cast<double>(series[s].name.size());
  }
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<ChartSeries>& series, int width, int height) {
  check_arg(!labels.empty() && !series.empty(), "svg_bar_chart: nothing to draw");
  for (const auto& s : series)
    check_arg(s.values.size() == labels.size(), "svg_bar_chart: series length mismatch");

  Frame f{64, 40, width - 16.0, height - 48.0, 0, 0};
  value_range(series, f.vmin, f.vmax);
  if (f.vmin > 0.0) f.vmin = 0.0;  // bars grow from zero

  std::ostringstream svg;
  open_svg(svg, title, width, height);
  draw_axes(svg, f);
  draw_legend(svg, series, f);

  double group_w = (f.x1 - f.x0) / static_cast<double>(labels.size());
  double bar_w = group_w * 0.8 / static_cast<double>(series.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    double gx = f.x0 + group_w * (static_cast<double>(i) + 0.1);
    for (size_t s = 0; s < series.size(); ++s) {
      double v = series[s].values[i];
      if (std::isnan(v)) continue;
      double y = f.y_of(std::max(v, 0.0));
      double h = std::fabs(f.y_of(0.0) - f.y_of(v));
      svg << "<rect x=\"" << num(gx + bar_w * static_cast<double>(s)) << "\" y=\"" << num(y)
          << "\" width=\"" << num(bar_w * 0.9) << "\" height=\"" << num(h) << "\" fill=\""
          << kPalette[s % kNColors] << "\"/>\n"
          << "<text x=\"" << num(gx + bar_w * (static_cast<double>(s) + 0.45)) << "\" y=\""
          << num(y - 3) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"10\">"
          << val(v) << "</text>\n";
    }
    svg << "<text x=\"" << num(f.x0 + group_w * (static_cast<double>(i) + 0.5)) << "\" y=\""
        << num(f.y1 + 16) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << esc(labels[i]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<ChartSeries>& series, int width, int height) {
  check_arg(!x.empty() && !series.empty(), "svg_line_chart: nothing to draw");
  for (const auto& s : series)
    check_arg(s.values.size() == x.size(), "svg_line_chart: series length mismatch");

  Frame f{64, 40, width - 16.0, height - 48.0, 0, 0};
  value_range(series, f.vmin, f.vmax);
  double xmin = *std::min_element(x.begin(), x.end());
  double xmax = *std::max_element(x.begin(), x.end());
  if (xmax == xmin) xmax = xmin + 1.0;
  auto x_of = [&](double v) { return f.x0 + (v - xmin) / (xmax - xmin) * (f.x1 - f.x0); };

  std::ostringstream svg;
  open_svg(svg, title, width, height);
  draw_axes(svg, f);
  draw_legend(svg, series, f);

  for (int t = 0; t <= 4; ++t) {
    double v = xmin + (xmax - xmin) * t / 4.0;
    svg << "<text x=\"" << num(x_of(v)) << "\" y=\"" << num(f.y1 + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << val(v)
        << "</text>\n";
  }
  for (size_t s = 0; s < series.size(); ++s) {
    std::ostringstream pts;
    bool open = false;
    for (size_t i = 0; i < x.size(); ++i) {
      double v = series[s].values[i];
      if (std::isnan(v)) continue;
      if (open) pts << " ";
      pts << num(x_of(x[i])) << "," << num(f.y_of(v));
      open = true;
    }
    if (!open) continue;
    svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
        << kPalette[s % kNColors] << "\" stroke-width=\"1.5\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cgrp
