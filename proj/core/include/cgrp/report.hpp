#pragma once

#include <string>
#include <vector>

#include "cgrp/metrics.hpp"

namespace cgrp {

/// One method/configuration row of an evaluation table.
struct ReportRow {
  std::string name;
  MetricsReport report;
};

/// Column order used by tables and plots (registration: mse ncc mi;
/// fusion: cc vif ssim; anything else alphabetical).
std::vector<std::string> report_metric_order(const std::vector<ReportRow>& rows);

/// Fixed-width text table, one row per method and one column per metric mean,
/// with the corpus header and any excluded item/metric markers.
std::string render_report_table(const std::vector<ReportRow>& rows);

/// Machine document carrying everything the table and plots show; the
/// round-trip through report_rows_from_json is lossless.
std::string report_rows_to_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> report_rows_from_json(const std::string& text);

/// Writes report.txt, report.json, a per-metric bar chart of the row means
/// and a per-metric line chart of per-item values under out_dir.
void write_report_files(const std::string& out_dir, const std::vector<ReportRow>& rows);

}  // namespace cgrp
