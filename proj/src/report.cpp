#include "lsmgan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "lsmgan/error.hpp"

namespace lsmgan::report {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

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

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

void open_svg(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
}

// Axes frame, horizontal grid and y ticks over [0, y_max].
void y_axis(std::ostringstream& o, double y_max, const std::string& label) {
  const double plot_h = kHeight - kTop - kBottom;
  for (int i = 0; i <= 5; ++i) {
    const double v = y_max * i / 5.0;
    const double y = kTop + plot_h * (1.0 - i / 5.0);
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << y << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(v)
      << "</text>\n";
  }
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight
    << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text transform=\"translate(18," << kTop + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(label) << "</text>\n";
}

void legend(std::ostringstream& o, const std::vector<std::string>& names) {
  const double x = kWidth - kRight + 14;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 8 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color(i)
      << "\"/>\n<text x=\"" << x + 18 << "\" y=\"" << y + 1 << "\">" << escape(names[i]) << "</text>\n";
  }
}

double nice_max(double v) {
  if (!(v > 0)) return 1.0;
  return std::max(1.0, std::ceil(v * 10.0) / 10.0);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_value(const std::string& s) {
  if (s == "NA" || s.empty()) return std::nullopt;
  return std::stod(s);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
  std::ostringstream o;
  open_svg(o, chart.title);
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_max = 0.0;
  auto tx = [&](double x) { return chart.log2_x ? std::log2(x) : x; };
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::LengthMismatch, "series x and y differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_min = std::min(x_min, tx(s.x[i]));
      x_max = std::max(x_max, tx(s.x[i]));
      if (s.y[i]) y_max = std::max(y_max, *s.y[i]);
    }
  }
  if (!(x_min < x_max)) {
    x_min = std::isfinite(x_min) ? x_min - 1 : 0;
    x_max = x_min + 2;
  }
  y_max = nice_max(y_max);
  y_axis(o, y_max, chart.y_label);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * (tx(x) - x_min) / (x_max - x_min); };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - y / y_max); };

  std::vector<double> ticks;
  for (const auto& s : chart.series) ticks.insert(ticks.end(), s.x.begin(), s.x.end());
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  for (double t : ticks)
    o << "<text x=\"" << px(t) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
      << fmt(t) << "</text>\n";
  o << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n";

  std::vector<std::string> names;
  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    names.push_back(s.name);
    std::string path;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!s.y[i]) {
        if (!path.empty()) {
          o << "<polyline fill=\"none\" stroke=\"" << color(si) << "\" stroke-width=\"2\" points=\""
            << path << "\"/>\n";
          path.clear();
        }
        continue;
      }
      path += fmt(px(s.x[i])) + "," + fmt(py(*s.y[i])) + " ";
      o << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(*s.y[i])) << "\" r=\"3\" fill=\""
        << color(si) << "\"/>\n";
    }
    if (!path.empty())
      o << "<polyline fill=\"none\" stroke=\"" << color(si) << "\" stroke-width=\"2\" points=\"" << path
        << "\"/>\n";
  }
  legend(o, names);
  o << "</svg>\n";
  return o.str();
}

std::string render_svg(const BarChart& chart) {
  if (chart.values.size() != chart.series_names.size())
    throw Error(ErrorCode::LengthMismatch, "one value row per series expected");
  for (const auto& row : chart.values)
    if (row.size() != chart.categories.size())
      throw Error(ErrorCode::LengthMismatch, "one value per category expected");
  std::ostringstream o;
  open_svg(o, chart.title);
  double y_max = 0.0;
  for (const auto& row : chart.values)
    for (const auto& v : row)
      if (v) y_max = std::max(y_max, *v);
  y_max = nice_max(y_max);
  y_axis(o, y_max, chart.y_label);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double group_w = plot_w / std::max<double>(1.0, static_cast<double>(chart.categories.size()));
  const double bar_w = group_w * 0.8 / std::max<double>(1.0, static_cast<double>(chart.series_names.size()));
  for (std::size_t c = 0; c < chart.categories.size(); ++c) {
    const double gx = kLeft + group_w * static_cast<double>(c) + group_w * 0.1;
    for (std::size_t s = 0; s < chart.series_names.size(); ++s) {
      const auto& v = chart.values[s][c];
      if (!v) continue;
      const double h = plot_h * *v / y_max;
      o << "<rect x=\"" << fmt(gx + bar_w * static_cast<double>(s)) << "\" y=\""
        << fmt(kTop + plot_h - h) << "\" width=\"" << fmt(bar_w) << "\" height=\"" << fmt(h)
        << "\" fill=\"" << color(s) << "\"/>\n";
    }
    o << "<text x=\"" << fmt(gx + group_w * 0.4) << "\" y=\"" << kHeight - kBottom + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(chart.categories[c]) << "</text>\n";
  }
  legend(o, chart.series_names);
  o << "</svg>\n";
  return o.str();
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::IoError, "CSV lacks column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size())
      throw Error(ErrorCode::IoError, path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<fs::path> generate_report(const fs::path& run_dir, const fs::path& plots) {
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& svg) {
    fs::create_directories(plots);
    written.push_back(plots / name);
    write_file(written.back(), svg);
  };

  if (fs::exists(run_dir / "experiment1.csv")) {
    const auto t = read_csv(run_dir / "experiment1.csv");
    BarChart chart{"Experiment 1: metrics per augmentation method", "value", {}, {}, {}};
    const std::vector<std::string> metrics = {"accuracy", "sensitivity", "specificity", "ppv", "npv", "f1"};
    for (const auto& m : metrics) chart.categories.push_back(m);
    for (const auto& row : t.rows) {
      chart.series_names.push_back(row[t.column("method")]);
      std::vector<std::optional<double>> values;
      for (const auto& m : metrics) values.push_back(parse_value(row[t.column(m)]));
      chart.values.push_back(std::move(values));
    }
    emit("experiment1.svg", render_svg(chart));
  }

  if (fs::exists(run_dir / "experiment2.csv")) {
    const auto t = read_csv(run_dir / "experiment2.csv");
    BarChart chart{"Experiment 2: F1 per signal-quality group", "F1", {}, {}, {}};
    std::map<std::string, std::size_t> series_index;
    std::map<std::string, std::size_t> group_index;
    for (const auto& row : t.rows) {
      const auto& g = row[t.column("group")];
      if (!group_index.count(g)) {
        group_index[g] = chart.categories.size();
        chart.categories.push_back(g);
      }
    }
    for (const auto& row : t.rows) {
      const auto& m = row[t.column("method")];
      if (!series_index.count(m)) {
        series_index[m] = chart.series_names.size();
        chart.series_names.push_back(m);
        chart.values.emplace_back(chart.categories.size());
      }
      chart.values[series_index[m]][group_index[row[t.column("group")]]] =
          parse_value(row[t.column("f1")]);
    }
    emit("experiment2.svg", render_svg(chart));
  }

  if (fs::exists(run_dir / "experiment3.csv")) {
    const auto t = read_csv(run_dir / "experiment3.csv");
    std::vector<std::string> groups;
    for (const auto& row : t.rows) {
      const auto& g = row[t.column("group")];
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    for (const auto& g : groups) {
      LineChart chart{"Experiment 3: F1 vs training size (" + g + ")", "balanced training records", "F1",
                      {}, true};
      std::map<std::string, std::size_t> series_index;
      for (const auto& row : t.rows) {
        if (row[t.column("group")] != g) continue;
        const auto& m = row[t.column("method")];
        if (!series_index.count(m)) {
          series_index[m] = chart.series.size();
          chart.series.push_back({m, {}, {}});
        }
        auto& s = chart.series[series_index[m]];
        s.x.push_back(std::stod(row[t.column("size")]));
        s.y.push_back(parse_value(row[t.column("f1")]));
      }
      emit("experiment3_" + g + ".svg", render_svg(chart));
    }
  }

  if (written.empty())
    throw Error(ErrorCode::IoError, "no experiment CSV found in " + run_dir.string());
  return written;
}

}  // namespace lsmgan::report
