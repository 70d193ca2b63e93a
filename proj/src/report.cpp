#include "fcl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fcl/matrix.hpp"

namespace fcl::report {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 70;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

void open_svg(std::ostringstream& os, const std::string& title, double w = kWidth, double h = kHeight) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
}

void close_svg(std::ostringstream& os, const std::string& footer, double h = kHeight) {
  if (!footer.empty()) {
    os << "<text x=\"10\" y=\"" << num(h - 8) << "\" font-size=\"10\" fill=\"#555\">" << escape(footer)
       << "</text>\n";
  }
  os << "</svg>\n";
}

struct Range {
  double lo = 0, hi = 1;
  void pad() {
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

// Five evenly spaced ticks with a y-grid.
void axes(std::ostringstream& os, const Range& xr, const Range& yr, const std::string& xl,
          const std::string& yl, bool x_ticks) {
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
     << num(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    const double y = kTop + ph - ph * k / 4.0;
    os << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + pw) << "\" y1=\"" << num(y) << "\" y2=\""
       << num(y) << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
       << fmt(std::round(v * 1000) / 1000) << "</text>\n";
    if (x_ticks) {
      const double xv = xr.lo + (xr.hi - xr.lo) * k / 4.0;
      const double x = kLeft + pw * k / 4.0;
      os << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
         << fmt(std::round(xv * 1000) / 1000) << "</text>\n";
    }
  }
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 30)
     << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n"
     << "<text transform=\"translate(16," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(yl) << "</text>\n";
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw ShapeError("Table::add: row width differs from header");
  rows_.push_back(std::move(cells));
}

std::string Table::csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void Table::write(const std::filesystem::path& path) const { write_text(path, csv()); }

std::string svg(const LineChart& chart) {
  Range xr{1e300, -1e300}, yr{1e300, -1e300};
  for (const auto& s : chart.series) {
    for (double v : s.x) xr = {std::min(xr.lo, v), std::max(xr.hi, v)};
    for (double v : s.y) {
      if (std::isfinite(v)) yr = {std::min(yr.lo, v), std::max(yr.hi, v)};
    }
  }
  if (xr.lo > xr.hi) xr = {0, 1};
  if (yr.lo > yr.hi) yr = {0, 1};
  yr.pad();
  if (xr.hi - xr.lo < 1e-12) xr.pad();
  std::ostringstream os;
  open_svg(os, chart.title);
  axes(os, xr, yr, chart.x_label, chart.y_label, true);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double x = kLeft + pw * (s.x[i] - xr.lo) / (xr.hi - xr.lo);
      const double y = kTop + ph - ph * (s.y[i] - yr.lo) / (yr.hi - yr.lo);
      os << num(x) << ',' << num(y) << ' ';
    }
    os << "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << num(kWidth - kRight + 12) << "\" x2=\"" << num(kWidth - kRight + 36) << "\" y1=\""
       << num(ly - 4) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n"
       << "<text x=\"" << num(kWidth - kRight + 42) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
       << "</text>\n";
  }
  close_svg(os, chart.footer);
  return os.str();
}

std::string svg(const BarChart& chart) {
  Range yr{0, 0};
  for (std::size_t i = 0; i < chart.values.size(); ++i) {
    const double e = i < chart.errors.size() ? chart.errors[i] : 0.0;
    yr.hi = std::max(yr.hi, chart.values[i] + e);
    yr.lo = std::min(yr.lo, chart.values[i] - e);
  }
  if (yr.hi - yr.lo < 1e-12) yr.hi = 1;
  yr.hi += 0.05 * (yr.hi - yr.lo);
  std::ostringstream os;
  open_svg(os, chart.title);
  axes(os, {0, 1}, yr, "", chart.y_label, false);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const double slot = pw / static_cast<double>(std::max<std::size_t>(chart.values.size(), 1));
  auto ypos = [&](double v) { return kTop + ph - ph * (v - yr.lo) / (yr.hi - yr.lo); };
  for (std::size_t i = 0; i < chart.values.size(); ++i) {
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    const double y0 = ypos(0.0);
    const double y1 = ypos(chart.values[i]);
    os << "<rect x=\"" << num(x) << "\" y=\"" << num(std::min(y0, y1)) << "\" width=\"" << num(slot * 0.7)
       << "\" height=\"" << num(std::abs(y0 - y1)) << "\" fill=\"" << kPalette[i % std::size(kPalette)]
       << "\"/>\n";
    if (i < chart.errors.size() && chart.errors[i] > 0) {
      const double cx = x + slot * 0.35;
      os << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\""
         << num(ypos(chart.values[i] - chart.errors[i])) << "\" y2=\""
         << num(ypos(chart.values[i] + chart.errors[i])) << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << num(x + slot * 0.35) << "\" y=\"" << num(kTop + ph + 16)
       << "\" text-anchor=\"middle\">" << escape(i < chart.labels.size() ? chart.labels[i] : "")
       << "</text>\n";
  }
  close_svg(os, chart.footer);
  return os.str();
}

std::string svg(const Heatmap& chart) {
  const double cell = 70;
  const double left = 90;
  const double top = 60;
  const double w = left + cell * static_cast<double>(chart.cols.size()) + 30;
  const double h = top + cell * static_cast<double>(chart.rows.size()) + 50;
  double hi = 0;
  for (const auto& r : chart.values) {
    for (double v : r) hi = std::max(hi, v);
  }
  if (hi <= 0) hi = 1;
  std::ostringstream os;
  open_svg(os, chart.title, w, h);
  for (std::size_t c = 0; c < chart.cols.size(); ++c) {
    os << "<text x=\"" << num(left + cell * (static_cast<double>(c) + 0.5)) << "\" y=\"" << num(top - 8)
       << "\" text-anchor=\"middle\">" << escape(chart.cols[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < chart.rows.size(); ++r) {
    const double y = top + cell * static_cast<double>(r);
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + cell / 2 + 4) << "\" text-anchor=\"end\">"
       << escape(chart.rows[r]) << "</text>\n";
    for (std::size_t c = 0; c < chart.cols.size() && c < chart.values[r].size(); ++c) {
      const double v = chart.values[r][c];
      const int shade = 255 - static_cast<int>(std::lround(200.0 * std::clamp(v / hi, 0.0, 1.0)));
      const double x = left + cell * static_cast<double>(c);
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell) << "\" height=\""
         << num(cell) << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\" stroke=\"white\"/>\n"
         << "<text x=\"" << num(x + cell / 2) << "\" y=\"" << num(y + cell / 2 + 4)
         << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
    }
  }
  close_svg(os, chart.footer, h);
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write " + path.string());
  os << text;
  if (!os) throw UsageError("write failed for " + path.string());
}

}  // namespace fcl::report
