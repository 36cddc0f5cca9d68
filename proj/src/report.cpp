#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ddf/errors.hpp"
#include "ddf/harness.hpp"

namespace ddf::harness {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string svg_header(int width, int height) {
  std::ostringstream ss;
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
     << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  return ss.str();
}

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct PlotFrame {
  double x0, y0, x1, y1;  // pixel corners of the data area
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
  double py(double y) const { return y0 - (y - ymin) / (ymax - ymin) * (y0 - y1); }
};

void draw_axes(std::ostringstream& svg, const PlotFrame& f, const std::string& xlabel,
               const std::string& ylabel) {
  svg << "<line x1=\"" << f.x0 << "\" y1=\"" << f.y0 << "\" x2=\"" << f.x1 << "\" y2=\"" << f.y0
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << f.x0 << "\" y1=\"" << f.y0 << "\" x2=\"" << f.x0 << "\" y2=\"" << f.y1
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (f.x0 + f.x1) / 2 << "\" y=\"" << f.y0 + 35
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  svg << "<text x=\"" << f.x0 - 40 << "\" y=\"" << (f.y0 + f.y1) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << f.x0 - 40 << " "
      << (f.y0 + f.y1) / 2 << ")\">" << ylabel << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    double yv = f.ymin + (f.ymax - f.ymin) * i / 5.0;
    double yp = f.py(yv);
    svg << "<line x1=\"" << f.x0 - 4 << "\" y1=\"" << yp << "\" x2=\"" << f.x0 << "\" y2=\"" << yp
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << f.x0 - 8 << "\" y=\"" << yp + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << num(std::round(yv * 100.0) / 100.0)
        << "</text>\n";
  }
}

}  // namespace

void write_results_csv(const ResultsTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out << "method,noise,xi,training_pct,repetitions,acc_mean,acc_std,ci95,selected\n";
  for (const auto& r : table.rows) {
    out << r.method << ',' << r.noise << ',' << num(r.xi) << ',' << r.training_pct << ','
        << r.repetitions << ',' << num(r.acc_mean) << ',' << num(r.acc_std) << ','
        << num(r.ci95_half) << ',' << (r.selected ? 1 : 0) << "\n";
  }
  if (!out) raise(Errc::io_failure, "short write on " + path);
}

ResultsTable read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) raise(Errc::io_failure, "empty csv " + path);

  ResultsTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    auto next = [&]() {
      if (!std::getline(ss, cell, ',')) raise(Errc::io_failure, "short row in " + path);
      return cell;
    };
    ResultRow r;
    r.method = next();
    r.noise = next();
    r.xi = std::stod(next());
    r.training_pct = std::stoi(next());
    r.repetitions = std::stoi(next());
    r.acc_mean = std::stod(next());
    r.acc_std = std::stod(next());
    r.ci95_half = std::stod(next());
    r.selected = std::stoi(next()) != 0;
    table.rows.push_back(std::move(r));
  }
  return table;
}

void report(const ResultsTable& table, const std::string& out_dir, bool plots) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_results_csv(table, (fs::path(out_dir) / "results.csv").string());
  if (plots && !table.rows.empty()) {
    write_accuracy_lines_svg(table, (fs::path(out_dir) / "accuracy_lines.svg").string());
    write_accuracy_bars_svg(table, (fs::path(out_dir) / "accuracy_bars.svg").string());
  }
}

void write_accuracy_lines_svg(const ResultsTable& table, const std::string& path) {
  // One series per (method, noise); x = training %, band = mean +/- std.
  std::map<std::string, std::vector<const ResultRow*>> series;
  for (const auto& r : table.rows) series[r.method + " (" + r.noise + ")"].push_back(&r);

  const int width = 640, height = 420;
  PlotFrame f{70, 360, 600, 40, 1e300, -1e300, 0.0, 1.0};
  for (const auto& r : table.rows) {
    f.xmin = std::min(f.xmin, static_cast<double>(r.training_pct));
    f.xmax = std::max(f.xmax, static_cast<double>(r.training_pct));
  }
  if (f.xmin >= f.xmax) {
    f.xmin -= 1.0;
    f.xmax += 1.0;
  }

  std::ostringstream svg;
  svg << svg_header(width, height);
  draw_axes(svg, f, "training data (%)", "accuracy");

  int idx = 0;
  for (auto& [name, rows] : series) {
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const ResultRow* a, const ResultRow* b) { return a->training_pct < b->training_pct; });
    const char* color = kSeriesColors[idx % 6];

    svg << "<polygon points=\"";
    for (const auto* r : sorted)
      svg << f.px(r->training_pct) << "," << f.py(std::min(1.0, r->acc_mean + r->acc_std)) << " ";
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it)
      svg << f.px((*it)->training_pct) << "," << f.py(std::max(0.0, (*it)->acc_mean - (*it)->acc_std))
          << " ";
    svg << "\" fill=\"" << color << "\" opacity=\"0.15\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : sorted) svg << f.px(r->training_pct) << "," << f.py(r->acc_mean) << " ";
    svg << "\"/>\n";
    for (const auto* r : sorted)
      svg << "<circle cx=\"" << f.px(r->training_pct) << "\" cy=\"" << f.py(r->acc_mean)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";

    svg << "<text x=\"" << f.x1 - 180 << "\" y=\"" << 50 + idx * 16 << "\" font-size=\"12\" fill=\""
        << color << "\">" << name << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out << svg.str();
}

void write_accuracy_bars_svg(const ResultsTable& table, const std::string& path) {
  // Final-step rows only, one bar per (method, noise) with a CI whisker.
  int final_pct = 0;
  for (const auto& r : table.rows) final_pct = std::max(final_pct, r.training_pct);
  std::vector<const ResultRow*> rows;
  for (const auto& r : table.rows)
    if (r.training_pct == final_pct) rows.push_back(&r);

  const int width = 640, height = 420;
  PlotFrame f{70, 360, 600, 40, 0.0, static_cast<double>(rows.size()), 0.0, 1.0};

  std::ostringstream svg;
  svg << svg_header(width, height);
  draw_axes(svg, f, "", "accuracy");

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto* r = rows[i];
    const char* color = kSeriesColors[i % 6];
    double cx = f.px(static_cast<double>(i) + 0.5);
    double bw = (f.px(1.0) - f.px(0.0)) * 0.5;
    double top = f.py(r->acc_mean);
    svg << "<rect x=\"" << cx - bw / 2 << "\" y=\"" << top << "\" width=\"" << bw << "\" height=\""
        << f.py(0.0) - top << "\" fill=\"" << color << "\" opacity=\"0.8\"/>\n";
    double lo = f.py(std::max(0.0, r->acc_mean - r->ci95_half));
    double hi = f.py(std::min(1.0, r->acc_mean + r->ci95_half));
    svg << "<line x1=\"" << cx << "\" y1=\"" << lo << "\" x2=\"" << cx << "\" y2=\"" << hi
        << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << cx << "\" y=\"" << f.y0 + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << r->method << " (" << r->noise
        << ")</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out << svg.str();
}

void write_tfr_heatmap_svg(const tfr::Tfr& tfr, std::size_t channel, const std::string& path) {
  if (channel >= tfr.channels.size()) raise(Errc::invalid_spec, "channel out of range");
  const Matrix& full = tfr.channels[channel];

  // Block-average down to a drawable grid; one rect per cell adds up fast.
  constexpr std::size_t kMaxSide = 240;
  Matrix reduced;
  const Matrix* src = &full;
  if (full.rows > kMaxSide || full.cols > kMaxSide) {
    std::size_t out_rows = std::min(full.rows, kMaxSide);
    std::size_t out_cols = std::min(full.cols, kMaxSide);
    reduced = Matrix(out_rows, out_cols);
    for (std::size_t r = 0; r < out_rows; ++r) {
      std::size_t r0 = r * full.rows / out_rows, r1 = (r + 1) * full.rows / out_rows;
      for (std::size_t c = 0; c < out_cols; ++c) {
        std::size_t c0 = c * full.cols / out_cols, c1 = (c + 1) * full.cols / out_cols;
        double acc = 0.0;
        for (std::size_t i = r0; i < r1; ++i)
          for (std::size_t j = c0; j < c1; ++j) acc += full.at(i, j);
        reduced.at(r, c) = acc / (static_cast<double>(r1 - r0) * static_cast<double>(c1 - c0));
      }
    }
    src = &reduced;
  }
  const Matrix& m = *src;

  double lo = m.data.empty() ? 0.0 : m.data.front();
  double hi = lo;
  for (double v : m.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;

  const double cell = std::max(1.0, std::min(4.0, 800.0 / static_cast<double>(std::max(m.rows, m.cols))));
  const int width = static_cast<int>(cell * static_cast<double>(m.rows)) + 2;
  const int height = static_cast<int>(cell * static_cast<double>(m.cols)) + 2;

  auto ramp = [](double t) {
    // dark blue -> teal -> yellow
    double r, g, b;
    if (t < 0.5) {
      double u = t * 2.0;
      r = 0.27 + (0.13 - 0.27) * u;
      g = 0.00 + (0.57 - 0.00) * u;
      b = 0.33 + (0.55 - 0.33) * u;
    } else {
      double u = (t - 0.5) * 2.0;
      r = 0.13 + (0.99 - 0.13) * u;
      g = 0.57 + (0.91 - 0.57) * u;
      b = 0.55 + (0.14 - 0.55) * u;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(r * 255),
                  static_cast<int>(g * 255), static_cast<int>(b * 255));
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << svg_header(width, height);
  // time along x, frequency along y with low frequencies at the bottom
  for (std::size_t t = 0; t < m.rows; ++t) {
    for (std::size_t fq = 0; fq < m.cols; ++fq) {
      double v = (m.at(t, fq) - lo) / (hi - lo);
      svg << "<rect x=\"" << 1.0 + cell * static_cast<double>(t) << "\" y=\""
          << 1.0 + cell * static_cast<double>(m.cols - 1 - fq) << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << ramp(v) << "\"/>\n";
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out << svg.str();
}

}  // namespace ddf::harness
