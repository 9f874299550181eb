#pragma once

#include <string>
#include <vector>

namespace cgrp {

struct ChartSeries {
  std::string name;
  std::vector<double> values;  // NaN entries are skipped when drawing
};

/// Standalone SVG bar chart, one bar group per label. Purely a function of
/// its arguments, so regenerating from a stored report is byte-identical.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<ChartSeries>& series, int width = 640,
                          int height = 400);

/// Standalone SVG line chart over a shared x axis.
std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<ChartSeries>& series, int width = 640,
                           int height = 400);

}  // namespace cgrp
