#include "cgrp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cgrp/ioutil.hpp"
#include "cgrp/plot_svg.hpp"

namespace cgrp {

using nlohmann::ordered_json;

std::vector<std::string> report_metric_order(const std::vector<ReportRow>& rows) {
  check_arg(!rows.empty(), "report: no rows");
  std::set<std::string> present;
  for (const auto& row : rows)
    for (const auto& [metric, vals] : row.report.values) present.insert(metric);

  const std::string& mode = rows.front().report.mode;
  std::vector<std::string> preferred;
  if (mode == "registration") preferred = {"mse", "ncc", "mi"};
  else if (mode == "fusion") preferred = {"cc", "vif", "ssim"};

  std::vector<std::string> order;
  for (const auto& m : preferred)
    if (present.count(m)) {
      order.push_back(m);
      present.erase(m);
    }
  order.insert(order.end(), present.begin(), present.end());
  return order;
}

std::string render_report_table(const std::vector<ReportRow>& rows) {
  auto metrics = report_metric_order(rows);
  const MetricsReport& head = rows.front().report;

  std::ostringstream os;
  os << (head.mode == "registration" ? "Registration" : "Fusion") << " metrics on corpus "
     << head.corpus << " (" << head.item_count << " items)\n";
  if (!head.checkpoint_id.empty())
    os << "checkpoint: " << head.checkpoint_id << "  config: " << head.config_hash << "\n";
  os << "\n";

  size_t name_w = 8;
  for (const auto& row : rows) name_w = std::max(name_w, row.name.size());
  os << "method" << std::string(name_w + 2 - 6, ' ');
  for (const auto& m : metrics) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-11s", m.c_str());
    os << buf;
  }
  os << "\n";
  for (const auto& row : rows) {
    os << row.name << std::string(name_w + 2 - row.name.size(), ' ');
    for (const auto& m : metrics) {
      auto it = row.report.means.find(m);
      char buf[32];
      if (it == row.report.means.end()) std::snprintf(buf, sizeof buf, "%-11s", "-");
      else std::snprintf(buf, sizeof buf, "%-11.6f", it->second);
      os << buf;
    }
    os << "\n";
  }

  for (const auto& row : rows)
    if (!row.report.excluded.empty()) {
      os << "\nexcluded as undefined (" << row.name << "):";
      for (const auto& e : row.report.excluded) os << " " << e;
      os << "\n";
    }
  return os.str();
}

namespace {

ordered_json report_to_json(const MetricsReport& r) {
  ordered_json j;
  j["corpus"] = r.corpus;
  j["checkpoint_id"] = r.checkpoint_id;
  j["config_hash"] = r.config_hash;
  j["mode"] = r.mode;
  j["item_count"] = r.item_count;
  j["items"] = r.items;
  ordered_json values = ordered_json::object();
  for (const auto& [metric, vals] : r.values) {
    ordered_json arr = ordered_json::array();
    for (const auto& v : vals) {
      if (v) arr.push_back(*v);
      else arr.push_back(nullptr);
    }
    values[metric] = std::move(arr);
  }
  j["values"] = std::move(values);
  j["means"] = r.means;
  j["excluded"] = r.excluded;
  return j;
}

MetricsReport report_from_json(const ordered_json& j) {
  MetricsReport r;
  r.corpus = j.at("corpus").get<std::string>();
  r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.item_count = j.at("item_count").get<int64_t>();
  r.items = j.at("items").get<std::vector<std::string>>();
  for (const auto& [metric, arr] : j.at("values").items()) {
    std::vector<std::optional<double>> vals;
    for (const auto& v : arr) {
      if (v.is_null()) vals.push_back(std::nullopt);
      else vals.push_back(v.get<double>());
    }
    r.values[metric] = std::move(vals);
  }
  r.means = j.at("means").get<std::map<std::string, double>>();
  r.excluded = j.at("excluded").get<std::vector<std::string>>();
  return r;
}

}  // namespace

std::string report_rows_to_json(const std::vector<ReportRow>& rows) {
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json jr;
    jr["name"] = row.name;
    jr["report"] = report_to_json(row.report);
    j["rows"].push_back(std::move(jr));
  }
  return j.dump(2);
}

std::vector<ReportRow> report_rows_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  std::vector<ReportRow> rows;
  for (const auto& jr : j.at("rows"))
    rows.push_back({jr.at("name").get<std::string>(), report_from_json(jr.at("report"))});
  check_arg(!rows.empty(), "report: document has no rows");
  return rows;
}

void write_report_files(const std::string& out_dir, const std::vector<ReportRow>& rows) {
  check_arg(!rows.empty(), "report: no rows");
  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  write_file_atomic((dir / "report.txt").string(), render_report_table(rows));
  write_file_atomic((dir / "report.json").string(), report_rows_to_json(rows));

  const MetricsReport& head = rows.front().report;
  for (const auto& metric : report_metric_order(rows)) {
    std::vector<std::string> labels;
    ChartSeries means{metric, {}};
    for (const auto& row : rows) {
      labels.push_back(row.name);
      auto it = row.report.means.find(metric);
      means.values.push_back(it == row.report.means.end() ? std::nan("") : it->second);
    }
    write_file_atomic((dir / ("plot_" + metric + ".svg")).string(),
                      svg_bar_chart("mean " + metric + " on " + head.corpus, labels, {means}));

    std::vector<double> x;
    for (size_t i = 0; i < head.items.size(); ++i) x.push_back(static_cast<double>(i));
    std::vector<ChartSeries> per_item;
    for (const auto& row : rows) {
      auto it = row.report.values.find(metric);
      if (it == row.report.values.end() || it->second.size() != x.size()) continue;
      ChartSeries s{row.name, {}};
      for (const auto& v : it->second) s.values.push_back(v ? *v : std::nan(""));
      per_item.push_back(std::move(s));
    }
    if (!x.empty() && !per_item.empty())
      write_file_atomic(
          (dir / ("plot_" + metric + "_items.svg")).string(),
          svg_line_chart(metric + " per item on " + head.corpus, x, per_item));
  }
}

}  // namespace cgrp
