#pragma once

// Phase-diagram slices of a surrogate over (ln h, ln a) and their table/image output.

#include <adaptnet/graph.hpp>
#include <adaptnet/surrogate.hpp>
#include <adaptnet/sweep.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adaptnet {

struct SliceSpec {
  double c = 0.1;
  double theta_h = 0.1;
  double theta_a = 0.1;
  double log_min = std::log(0.003);
  double log_max = std::log(1.0);
};

struct HeatmapGrid {
  std::vector<double> ln_h;  // columns, increasing
  std::vector<double> ln_a;  // rows, increasing
  SliceSpec slice;
  std::size_t network_size = 0;
  // fields[measure][row * cols + col]
  std::array<std::vector<double>, kMeasureCount> fields;

  std::size_t rows() const noexcept { return ln_a.size(); }
  std::size_t cols() const noexcept { return ln_h.size(); }
  double at(std::size_t measure, std::size_t row, std::size_t col) const {
    return fields[measure][row * cols() + col];
  }
};

inline std::size_t measure_index(std::string_view name) {
  for (std::size_t k = 0; k < kMeasureCount; ++k)
    if (name == kMeasureNames[k]) return k;
  throw std::invalid_argument("unknown measure '" + std::string(name) + "'");
}

/// Evenly spaced points from lo to hi inclusive; endpoints are exact.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  v.back() = hi;
  return v;
}

/// One clamped predict() per cell of a resolution x resolution grid.
inline HeatmapGrid evaluate_grid(const SurrogateModel& model, const SliceSpec& slice, std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("evaluate_grid: resolution must be at least 2");
  if (!(slice.log_max > slice.log_min)) throw std::invalid_argument("evaluate_grid: empty axis range");
  HeatmapGrid g;
  g.slice = slice;
  g.network_size = model.network_size;
  g.ln_h = linspace(slice.log_min, slice.log_max, resolution);
  g.ln_a = linspace(slice.log_min, slice.log_max, resolution);
  for (auto& f : g.fields) f.resize(resolution * resolution);
  const double ln_c = std::log(slice.c);
  const double ln_th = std::log(slice.theta_h);
  const double ln_ta = std::log(slice.theta_a);
  for (std::size_t r = 0; r < resolution; ++r)
    for (std::size_t col = 0; col < resolution; ++col) {
      const Vec5 y = model.predict({ln_c, g.ln_h[col], g.ln_a[r], ln_th, ln_ta});
      for (std::size_t k = 0; k < kMeasureCount; ++k) g.fields[k][r * resolution + col] = y[k];
    }
  return g;
}

struct Rgb {
  std::uint8_t r, g, b;
  bool operator==(const Rgb&) const = default;
};

/// Diverging scale: t = 0 blue (0,0,255), t = 0.5 white, t = 1 red (255,0,0).
inline Rgb diverging_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * v)); };
  if (t < 0.5) {
    const double s = t / 0.5;
    return {channel(s), channel(s), 255};
  }
  const double s = (1.0 - t) / 0.5;
  return {255, channel(s), channel(s)};
}

/// High average edge weight means a homogenized network, so that measure is drawn blue-high;
/// every other measure is red-high.
inline bool high_is_fragmented(std::size_t measure) { return measure != 0; }

/// Comma-separated grid: header "ln_a\ln_h" then one column per ln h; one row per ln a, increasing.
inline void write_grid_csv(std::ostream& out, const HeatmapGrid& g, std::size_t measure) {
  out << "ln_a\\ln_h";
  for (const double h : g.ln_h) out << ',' << format_double(h);
  out << '\n';
  for (std::size_t r = 0; r < g.rows(); ++r) {
    out << format_double(g.ln_a[r]);
    for (std::size_t c = 0; c < g.cols(); ++c) out << ',' << format_double(g.at(measure, r, c));
    out << '\n';
  }
}

/// Binary PPM (P6). ln a increases upward, ln h to the right; each cell becomes scale x scale pixels.
/// Colors are normalized over the field's own min..max; a constant field is uniformly white.
inline std::string render_ppm(const HeatmapGrid& g, std::size_t measure, std::size_t scale = 1) {
  if (scale == 0) throw std::invalid_argument("render_ppm: scale must be positive");
  const auto& f = g.fields.at(measure);
  const auto [lo_it, hi_it] = std::minmax_element(f.begin(), f.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const bool red_high = high_is_fragmented(measure);

  const std::size_t width = g.cols() * scale;
  const std::size_t height = g.rows() * scale;
  std::string img = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t header = img.size();
  img.resize(header + width * height * 3);
  for (std::size_t py = 0; py < height; ++py) {
    const std::size_t row = g.rows() - 1 - py / scale;
    for (std::size_t px = 0; px < width; ++px) {
      const double v = g.at(measure, row, px / scale);
      double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      if (!red_high) t = 1.0 - t;
      const Rgb c = diverging_color(t);
      const std::size_t at = header + (py * width + px) * 3;
      img[at] = static_cast<char>(c.r);
      img[at + 1] = static_cast<char>(c.g);
      img[at + 2] = static_cast<char>(c.b);
    }
  }
  return img;
}

struct RenderedHeatmap {
  std::string table;  // CSV
  std::string image;  // PPM bytes
  std::string stem;   // file name without extension
};

/// "<measure>_n<n>_c<c>_th<theta_h>_ta<theta_a>"
inline std::string heatmap_stem(const HeatmapGrid& g, std::size_t measure) {
  return std::string(kMeasureNames[measure]) + "_n" + std::to_string(g.network_size) + "_c" +
         format_double(g.slice.c) + "_th" + format_double(g.slice.theta_h) + "_ta" + format_double(g.slice.theta_a);
}

inline RenderedHeatmap render_heatmap(const HeatmapGrid& g, std::string_view measure, std::size_t scale = 1) {
  const std::size_t k = measure_index(measure);
  std::ostringstream table;
  write_grid_csv(table, g, k);
  return {table.str(), render_ppm(g, k, scale), heatmap_stem(g, k)};
}

}  // namespace adaptnet
