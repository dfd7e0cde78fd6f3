#pragma once

// Self-contained SVG charts for experiment outputs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lsmgan::report {

struct Series {
  std::string name;
  std::vector<double> x;
  /// Undefined points (NA) break the line.
  std::vector<std::optional<double>> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log2_x = false;
};

/// Bars grouped by category; one bar per series inside each group.
struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<std::string> series_names;
  /// values[series][category]
  std::vector<std::vector<std::optional<double>>> values;
};

std::string render_svg(const LineChart& chart);
std::string render_svg(const BarChart& chart);

/// Header-keyed CSV rows as read back from a run directory.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Charts every experiment CSV found in run_dir into plot_dir and returns
/// the written paths. Experiment 3 yields one chart per quality
/// group with one series per method. Throws IoError when run_dir holds no
/// experiment output.
std::vector<std::filesystem::path> generate_report(const std::filesystem::path& run_dir,
                                                   const std::filesystem::path& plot_dir);

}  // namespace lsmgan::report
