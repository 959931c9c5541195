#include "thinshell/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "thinshell/errors.hpp"

namespace thinshell {

namespace {

constexpr int kW = 720, kH = 480, kMargin = 60;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

struct Scale {
  double lo, hi;
  double to_px(double v, int px_lo, int px_hi) const {
    const double t = (hi > lo) ? (v - lo) / (hi - lo) : 0.5;
    return px_lo + t * (px_hi - px_lo);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// simple blue->white->red ramp mapped to [0,1]
std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto ch = [](double x) { return static_cast<int>(std::lround(255 * std::clamp(x, 0.0, 1.0))); };
  const double r = t < 0.5 ? 2 * t : 1.0;
  const double b = t < 0.5 ? 1.0 : 2 * (1 - t);
  const double g = t < 0.5 ? 2 * t : 2 * (1 - t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", ch(r), ch(g), ch(b));
  return buf;
}

}  // namespace

void svg_line_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                   const std::string& ylabel, const std::vector<double>& x,
                   const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write SVG: " + path);
  Scale sx{x.empty() ? 0 : *std::min_element(x.begin(), x.end()),
           x.empty() ? 1 : *std::max_element(x.begin(), x.end())};
  double ylo = 1e300, yhi = -1e300;
  for (const auto& [name, ys] : series)
    for (double v : ys) {
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
  if (!(ylo < yhi)) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  Scale sy{ylo, yhi};

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  // axes
  out << "<line x1='" << kMargin << "' y1='" << kH - kMargin << "' x2='" << kW - kMargin
      << "' y2='" << kH - kMargin << "' stroke='black'/>\n";
  out << "<line x1='" << kMargin << "' y1='" << kMargin << "' x2='" << kMargin << "' y2='"
      << kH - kMargin << "' stroke='black'/>\n";
  out << "<text x='" << kW / 2 << "' y='" << kH - 16 << "' text-anchor='middle' font-size='12'>"
      << xlabel << "</text>\n";
  out << "<text x='16' y='" << kH / 2 << "' font-size='12' transform='rotate(-90 16 " << kH / 2
      << ")' text-anchor='middle'>" << ylabel << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = sx.lo + i * (sx.hi - sx.lo) / 4;
    const double yv = sy.lo + i * (sy.hi - sy.lo) / 4;
    out << "<text x='" << sx.to_px(xv, kMargin, kW - kMargin) << "' y='" << kH - kMargin + 16
        << "' text-anchor='middle' font-size='10'>" << fmt(xv) << "</text>\n";
    out << "<text x='" << kMargin - 6 << "' y='" << sy.to_px(yv, kH - kMargin, kMargin) + 4
        << "' text-anchor='end' font-size='10'>" << fmt(yv) << "</text>\n";
  }
  int si = 0;
  for (const auto& [name, ys] : series) {
    const char* color = kSeriesColors[si % 5];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < x.size() && i < ys.size(); ++i)
      out << sx.to_px(x[i], kMargin, kW - kMargin) << ','
          << sy.to_px(ys[i], kH - kMargin, kMargin) << ' ';
    out << "'/>\n";
    out << "<text x='" << kW - kMargin - 4 << "' y='" << kMargin + 14 * (si + 1)
        << "' text-anchor='end' font-size='11' fill='" << color << "'>" << name << "</text>\n";
    ++si;
  }
  out << "</svg>\n";
}

void svg_heatmap(const std::string& path, const std::string& title, const Grid2& values) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write SVG: " + path);
  const int ns = static_cast<int>(values.rows());
  const int nt = static_cast<int>(values.cols());
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  const double cw = static_cast<double>(kW - 2 * kMargin) / nt;
  const double chh = static_cast<double>(kH - 2 * kMargin) / ns;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << " [" << fmt(lo) << ", " << fmt(hi) << "]</text>\n";
  for (int k = 0; k < ns; ++k)
    for (int j = 0; j < nt; ++j) {
      const double t = hi > lo ? (values(k, j) - lo) / (hi - lo) : 0.5;
      out << "<rect x='" << kMargin + j * cw << "' y='" << kMargin + k * chh << "' width='"
          << cw + 0.5 << "' height='" << chh + 0.5 << "' fill='" << ramp_color(t) << "'/>\n";
    }
  out << "<text x='" << kW / 2 << "' y='" << kH - 16
      << "' text-anchor='middle' font-size='12'>theta</text>\n";
  out << "<text x='16' y='" << kH / 2 << "' font-size='12' transform='rotate(-90 16 " << kH / 2
      << ")' text-anchor='middle'>s</text>\n";
  out << "</svg>\n";
}

}  // namespace thinshell
