#pragma once

// CSV tables and dependency-free SVG charts for experiment outputs.

#include <filesystem>
#include <string>
#include <vector>

namespace fcl::report {

/// %.10g; the one number format every CSV uses, so reruns compare bytewise.
[[nodiscard]] std::string fmt(double v);

class Table {
 public:
  explicit Table(std::vector<std::string> header);
  /// Cells are written verbatim; row width must match the header.
  void add(std::vector<std::string> cells);
  [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  [[nodiscard]] std::string csv() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::string footer;
};
[[nodiscard]] std::string svg(const LineChart& chart);

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<double> errors;  // optional ± bars, same length as values
  std::string footer;
};
[[nodiscard]] std::string svg(const BarChart& chart);

struct Heatmap {
  std::string title;
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> values;
  std::string footer;
};
[[nodiscard]] std::string svg(const Heatmap& chart);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fcl::report
