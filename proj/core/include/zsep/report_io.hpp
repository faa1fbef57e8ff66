#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace zsep {

/// Fixed-precision rendering used in every CSV ("%.9g"; NaN as empty).
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  /// Throws if the row width differs from the header.
  void add_row(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }
  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Reads a file written by CsvTable::write (no quoting support).
CsvTable read_csv(const std::filesystem::path& path);

struct PlotSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Axes, ticks and one polyline per series. Each series is drawn against its
/// own min/max so metrics with different units share the frame; the legend
/// lists the range.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::vector<PlotSeries>& series);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace zsep
