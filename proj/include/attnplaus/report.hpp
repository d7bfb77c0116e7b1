#pragma once

#include <string>
#include <vector>

#include "attnplaus/metrics.hpp"

namespace attnplaus {

// Token-grid heatmap. `values` is row-major, one row per row_token; a single
// row with one (possibly empty) row token renders as a score strip.
struct HeatmapSpec {
  std::vector<std::string> row_tokens;
  std::vector<std::string> col_tokens;
  std::vector<std::vector<double>> values;  // in [0,1]
  std::string title;
  std::string hue = "#ff7f0e";  // one hue per map source; opacity carries value
};

struct NamedCurve {
  std::string name;
  RocCurve curve;
  std::string color;
};

// One polyline; points with non-finite y are dropped.
struct NamedSeries {
  std::string name;
  std::vector<double> x, y;
  std::string color;
};

struct HistogramSeries {
  std::string name;
  std::vector<double> values;
  std::string color;
};

// All renderers are pure: the same input yields byte-identical SVG.
std::string render_heatmap(const HeatmapSpec& spec);
std::string render_roc(const std::vector<NamedCurve>& curves);
std::string render_auc_lines(const std::vector<NamedSeries>& series,
                             const std::string& x_label, const std::string& y_label);
std::string render_histograms(const std::vector<HistogramSeries>& series, double lo,
                              double hi, std::size_t bins,
                              const std::string& x_label);

}  // namespace attnplaus
