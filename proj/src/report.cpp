#include "attnplaus/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "attnplaus/errors.hpp"

namespace attnplaus {
namespace {

// Shared chart geometry: a square plot area inside fixed margins keeps the
// coordinate math identical across figures and trivially checkable.
constexpr double kSize = 480.0;
constexpr double kMargin = 48.0;
constexpr double kPlot = kSize - 2.0 * kMargin;

std::string fmt(double v) {
  if (v == 0.0) return "0";  // avoid the "-0" spelling
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(double width, double height) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
                  "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
                  fmt(height) + "\" font-family=\"monospace\" font-size=\"12\">\n";
  s += "<rect width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
       "\" fill=\"white\"/>\n";
  return s;
}

void text_at(std::string& s, double x, double y, const std::string& content,
             const std::string& extra = "") {
  s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\"" +
       (extra.empty() ? "" : " " + extra) + ">" + escape(content) + "</text>\n";
}

// Axes with 0/0.25/.../1-style ticks mapped from [x_lo,x_hi] x [y_lo,y_hi].
struct Frame {
  double x_lo, x_hi, y_lo, y_hi;

  double px(double x) const { return kMargin + (x - x_lo) / (x_hi - x_lo) * kPlot; }
  double py(double y) const {
    return kMargin + (1.0 - (y - y_lo) / (y_hi - y_lo)) * kPlot;
  }
};

void draw_frame(std::string& s, const Frame& f, int ticks, const std::string& x_label,
                const std::string& y_label) {
  s += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" +
       fmt(kPlot) + "\" height=\"" + fmt(kPlot) +
       "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int t = 0; t <= ticks; ++t) {
    double fx = f.x_lo + (f.x_hi - f.x_lo) * t / ticks;
    double fy = f.y_lo + (f.y_hi - f.y_lo) * t / ticks;
    double x = f.px(fx), y = f.py(fy);
    s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kMargin + kPlot) + "\" x2=\"" +
         fmt(x) + "\" y2=\"" + fmt(kMargin + kPlot + 5) + "\" stroke=\"#333333\"/>\n";
    text_at(s, x, kMargin + kPlot + 20, fmt(fx), "text-anchor=\"middle\"");
    s += "<line x1=\"" + fmt(kMargin - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
         fmt(kMargin) + "\" y2=\"" + fmt(y) + "\" stroke=\"#333333\"/>\n";
    text_at(s, kMargin - 8, y + 4, fmt(fy), "text-anchor=\"end\"");
  }
  text_at(s, kMargin + kPlot / 2, kSize - 8, x_label, "text-anchor=\"middle\"");
  text_at(s, 14, kMargin + kPlot / 2, y_label,
          "text-anchor=\"middle\" transform=\"rotate(-90 14 " +
              fmt(kMargin + kPlot / 2) + ")\"");
}

void draw_legend(std::string& s, const std::vector<std::pair<std::string, std::string>>&
                                     entries /* name, color */) {
  double x = kMargin + kPlot - 8, y = kMargin + kPlot - 12.0 * 1.6 * entries.size();
  for (const auto& [name, color] : entries) {
    s += "<line x1=\"" + fmt(x - 150) + "\" y1=\"" + fmt(y - 4) + "\" x2=\"" +
         fmt(x - 120) + "\" y2=\"" + fmt(y - 4) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    text_at(s, x - 112, y, name);
    y += 12.0 * 1.6;
  }
}

std::string polyline(const std::vector<std::pair<double, double>>& pts,
                     const std::string& color) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + color +
                  "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += " ";
    s += fmt(pts[i].first) + "," + fmt(pts[i].second);
  }
  return s + "\"/>\n";
}

}  // namespace

std::string render_heatmap(const HeatmapSpec& spec) {
  const std::size_t rows = spec.row_tokens.size();
  const std::size_t cols = spec.col_tokens.size();
  if (rows == 0 || cols == 0) throw DimensionError("heatmap needs tokens on both axes");
  if (spec.values.size() != rows)
    throw DimensionError("heatmap has " + std::to_string(spec.values.size()) +
                         " value rows for " + std::to_string(rows) + " row tokens");
  for (const auto& row : spec.values)
    if (row.size() != cols)
      throw DimensionError("heatmap row has " + std::to_string(row.size()) +
                           " values for " + std::to_string(cols) + " column tokens");
  for (const auto& row : spec.values)
    for (double v : row)
      if (!(v >= 0.0 && v <= 1.0))
        throw RangeError("heatmap value " + fmt(v) + " outside [0, 1]");

  const double cell = 28.0;
  std::size_t longest = 1;
  for (const auto& t : spec.row_tokens) longest = std::max(longest, t.size());
  const double left = 16.0 + 7.2 * static_cast<double>(longest);
  const double top = 96.0;
  const double bar_gap = 24.0, bar_w = 16.0;
  const double width = left + cell * static_cast<double>(cols) + bar_gap + bar_w + 40.0;
  const double height = top + cell * static_cast<double>(rows) + 24.0;

  std::string s = svg_open(width, height);
  text_at(s, left, 20, spec.title, "font-size=\"14\"");

  for (std::size_t c = 0; c < cols; ++c) {
    double x = left + cell * (static_cast<double>(c) + 0.5);
    text_at(s, x, top - 8, spec.col_tokens[c],
            "text-anchor=\"start\" transform=\"rotate(-60 " + fmt(x) + " " +
                fmt(top - 8) + ")\"");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    text_at(s, left - 8, top + cell * (static_cast<double>(r) + 0.5) + 4,
            spec.row_tokens[r], "text-anchor=\"end\"");
    for (std::size_t c = 0; c < cols; ++c) {
      double x = left + cell * static_cast<double>(c);
      double y = top + cell * static_cast<double>(r);
      s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(cell) +
           "\" height=\"" + fmt(cell) + "\" fill=\"" + spec.hue + "\" fill-opacity=\"" +
           fmt(spec.values[r][c]) + "\" stroke=\"#cccccc\"/>\n";
    }
  }

  // colorbar: ten stacked swatches from 1 down to 0.1, plus end labels
  const double bar_x = left + cell * static_cast<double>(cols) + bar_gap;
  const double bar_h = cell * static_cast<double>(rows);
  for (int i = 0; i < 10; ++i) {
    s += "<rect x=\"" + fmt(bar_x) + "\" y=\"" + fmt(top + bar_h * i / 10.0) +
         "\" width=\"" + fmt(bar_w) + "\" height=\"" + fmt(bar_h / 10.0) + "\" fill=\"" +
         spec.hue + "\" fill-opacity=\"" + fmt(1.0 - i / 10.0) +
         "\" stroke=\"#cccccc\"/>\n";
  }
  text_at(s, bar_x + bar_w + 4, top + 10, "1");
  text_at(s, bar_x + bar_w + 4, top + bar_h, "0");
  return s + "</svg>\n";
}

std::string render_roc(const std::vector<NamedCurve>& curves) {
  if (curves.empty()) throw EmptyVector("roc figure needs at least one curve");
  Frame f{0.0, 1.0, 0.0, 1.0};
  std::string s = svg_open(kSize, kSize);
  draw_frame(s, f, 4, "false positive rate", "true positive rate");
  s += "<line x1=\"" + fmt(f.px(0)) + "\" y1=\"" + fmt(f.py(0)) + "\" x2=\"" +
       fmt(f.px(1)) + "\" y2=\"" + fmt(f.py(1)) +
       "\" stroke=\"#999999\" stroke-dasharray=\"6 4\"/>\n";
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& nc : curves) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(nc.curve.points.size());
    for (const auto& pt : nc.curve.points) pts.emplace_back(f.px(pt.fpr), f.py(pt.tpr));
    s += polyline(pts, nc.color);
    legend.emplace_back(nc.name, nc.color);
  }
  draw_legend(s, legend);
  return s + "</svg>\n";
}

std::string render_auc_lines(const std::vector<NamedSeries>& series,
                             const std::string& x_label, const std::string& y_label) {
  if (series.empty()) throw EmptyVector("line figure needs at least one series");
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool seen = false;
  for (const auto& sr : series)
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (!std::isfinite(sr.y[i])) continue;
      if (!seen) {
        x_lo = x_hi = sr.x[i];
        y_lo = y_hi = sr.y[i];
        seen = true;
      } else {
        x_lo = std::min(x_lo, sr.x[i]);
        x_hi = std::max(x_hi, sr.x[i]);
        y_lo = std::min(y_lo, sr.y[i]);
        y_hi = std::max(y_hi, sr.y[i]);
      }
    }
  if (!seen) throw EmptyVector("line figure has no finite points");
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  } else {
    double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }

  Frame f{x_lo, x_hi, y_lo, y_hi};
  std::string s = svg_open(kSize, kSize);
  draw_frame(s, f, 4, x_label, y_label);
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& sr : series) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < sr.x.size(); ++i)
      if (std::isfinite(sr.y[i])) pts.emplace_back(f.px(sr.x[i]), f.py(sr.y[i]));
    s += polyline(pts, sr.color);
    legend.emplace_back(sr.name, sr.color);
  }
  draw_legend(s, legend);
  return s + "</svg>\n";
}

std::string render_histograms(const std::vector<HistogramSeries>& series, double lo,
                              double hi, std::size_t bins, const std::string& x_label) {
  if (series.empty()) throw EmptyVector("histogram needs at least one series");
  if (!(hi > lo)) throw RangeError("histogram range is empty");
  if (bins == 0) throw RangeError("histogram needs at least one bin");

  std::vector<std::vector<std::size_t>> counts(series.size(),
                                               std::vector<std::size_t>(bins, 0));
  std::size_t peak = 1;
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (double v : series[k].values) {
      if (!std::isfinite(v)) continue;
      double t = (v - lo) / (hi - lo);
      if (t < 0.0 || t > 1.0) continue;
      std::size_t b = std::min(bins - 1, static_cast<std::size_t>(t * bins));
      peak = std::max(peak, ++counts[k][b]);
    }
  }

  Frame f{lo, hi, 0.0, static_cast<double>(peak)};
  std::string s = svg_open(kSize, kSize);
  draw_frame(s, f, 4, x_label, "count");
  std::vector<std::pair<std::string, std::string>> legend;
  const double bin_w = kPlot / static_cast<double>(bins);
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (std::size_t b = 0; b < bins; ++b) {
      if (counts[k][b] == 0) continue;  // only occupied bins render
      double x = kMargin + bin_w * static_cast<double>(b);
      double y = f.py(static_cast<double>(counts[k][b]));
      s += "<rect class=\"bin\" x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" +
           fmt(bin_w) + "\" height=\"" + fmt(kMargin + kPlot - y) + "\" fill=\"" +
           series[k].color + "\" fill-opacity=\"0.5\"/>\n";
    }
    legend.emplace_back(series[k].name, series[k].color);
  }
  draw_legend(s, legend);
  return s + "</svg>\n";
}

}  // namespace attnplaus
