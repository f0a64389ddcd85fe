// faultmap/plot.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <map>
#include <ostream>

#include "faultmap/core.hpp"
#include "faultmap/io.hpp"

namespace faultmap {

struct PlotOptions {
  int width = 900;
  int height = 640;
  double point_radius = 3.0;
  std::string title;
  std::string x_label = "dim1";
  std::string y_label = "dim2";
};

namespace detail {

inline const std::array<const char*, 10>& categorical_palette() {
  static const std::array<const char*, 10> palette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette;
}

inline std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

/// Dark-blue to teal to yellow ramp for t in [0, 1].
inline std::string ramp_color(double t) {
  struct Stop {
    double r, g, b;
  };
  constexpr Stop stops[3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  t = std::min(1.0, std::max(0.0, t));
  const double pos = t * 2.0;
  const int seg = pos >= 1.0 ? 1 : 0;
  const double f = pos - seg;
  auto lerp = [&](double a, double b) { return a + f * (b - a); };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(lerp(stops[seg].r, stops[seg + 1].r))),
                static_cast<int>(std::lround(lerp(stops[seg].g, stops[seg + 1].g))),
                static_cast<int>(std::lround(lerp(stops[seg].b, stops[seg + 1].b))));
  return std::string(buf);
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

}  // namespace detail

/// Deterministic SVG scatter plot. Categorical color values get a fixed
/// palette keyed by order of first appearance; numeric values get a
/// continuous ramp with a gradient legend. One circle element per point.
inline void write_scatter_svg(std::ostream& out, std::span<const double> x,
                              std::span<const double> y,
                              const std::vector<std::string>& color_values,
                              const PlotOptions& options = {}) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n || color_values.size() != n)
    throw invalid_argument("write_scatter_svg: x, y and color values must be non-empty and equal length");

  const bool numeric_color = [&] {
    for (const auto& v : color_values)
      if (!detail::parses_as_double(v)) return false;
    return true;
  }();

  double x_lo = x[0], x_hi = x[0], y_lo = y[0], y_hi = y[0];
  for (std::size_t i = 0; i < n; ++i) {
    x_lo = std::min(x_lo, x[i]);
    x_hi = std::max(x_hi, x[i]);
    y_lo = std::min(y_lo, y[i]);
    y_hi = std::max(y_hi, y[i]);
  }
  if (x_hi == x_lo) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  if (y_hi == y_lo) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }

  const double margin_left = 60.0, margin_right = 170.0, margin_top = 40.0, margin_bottom = 50.0;
  const double plot_w = options.width - margin_left - margin_right;
  const double plot_h = options.height - margin_top - margin_bottom;
  auto sx = [&](double v) { return margin_left + (v - x_lo) / (x_hi - x_lo) * plot_w; };
  auto sy = [&](double v) { return margin_top + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h; };

  double c_lo = 0.0, c_hi = 1.0;
  std::vector<double> numeric(n, 0.0);
  std::map<std::string, std::size_t> category_order;
  std::vector<std::string> category_names;
  if (numeric_color) {
    for (std::size_t i = 0; i < n; ++i) numeric[i] = detail::parse_double(color_values[i], "color");
    c_lo = c_hi = numeric[0];
    for (double v : numeric) {
      c_lo = std::min(c_lo, v);
      c_hi = std::max(c_hi, v);
    }
    if (c_hi == c_lo) c_hi = c_lo + 1.0;
  } else {
    for (const auto& v : color_values)
      if (category_order.emplace(v, category_order.size()).second) category_names.push_back(v);
  }

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
      << options.height << "\" viewBox=\"0 0 " << options.width << " " << options.height
      << "\">\n";
  if (numeric_color) {
    out << "  <defs>\n    <linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
    for (int s = 0; s <= 4; ++s) {
      const double t = s / 4.0;
      out << "      <stop offset=\"" << detail::svg_number(t * 100.0) << "%\" stop-color=\""
          << detail::ramp_color(t) << "\"/>\n";
    }
    out << "    </linearGradient>\n  </defs>\n";
  }
  out << "  <rect x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" fill=\"white\"/>\n";
  out << "  <rect x=\"" << detail::svg_number(margin_left) << "\" y=\""
      << detail::svg_number(margin_top) << "\" width=\"" << detail::svg_number(plot_w)
      << "\" height=\"" << detail::svg_number(plot_h)
      << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  if (!options.title.empty())
    out << "  <text x=\"" << detail::svg_number(margin_left) << "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << detail::xml_escape(options.title) << "</text>\n";

  // Axis extremes.
  out << "  <text x=\"" << detail::svg_number(margin_left) << "\" y=\""
      << detail::svg_number(margin_top + plot_h + 18.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(x_lo) << "</text>\n";
  out << "  <text x=\"" << detail::svg_number(margin_left + plot_w - 40.0) << "\" y=\""
      << detail::svg_number(margin_top + plot_h + 18.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(x_hi) << "</text>\n";
  out << "  <text x=\"8\" y=\"" << detail::svg_number(margin_top + plot_h)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(y_lo) << "</text>\n";
  out << "  <text x=\"8\" y=\"" << detail::svg_number(margin_top + 10.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(y_hi) << "</text>\n";
  out << "  <text x=\"" << detail::svg_number(margin_left + plot_w / 2.0 - 15.0) << "\" y=\""
      << detail::svg_number(margin_top + plot_h + 34.0)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(options.x_label)
      << "</text>\n";

  for (std::size_t i = 0; i < n; ++i) {
    std::string color;
    if (numeric_color) {
      color = detail::ramp_color((numeric[i] - c_lo) / (c_hi - c_lo));
    } else {
      const auto& palette = detail::categorical_palette();
      color = palette[category_order[color_values[i]] % palette.size()];
    }
    out << "  <circle cx=\"" << detail::svg_number(sx(x[i])) << "\" cy=\""
        << detail::svg_number(sy(y[i])) << "\" r=\"" << detail::svg_number(options.point_radius)
        << "\" fill=\"" << color << "\" fill-opacity=\"0.75\"/>\n";
  }

  const double legend_x = margin_left + plot_w + 20.0;
  if (numeric_color) {
    out << "  <rect x=\"" << detail::svg_number(legend_x) << "\" y=\""
        << detail::svg_number(margin_top) << "\" width=\"16\" height=\""
        << detail::svg_number(plot_h) << "\" fill=\"url(#ramp)\" stroke=\"#333333\"/>\n";
    out << "  <text x=\"" << detail::svg_number(legend_x + 22.0) << "\" y=\""
        << detail::svg_number(margin_top + 10.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(c_hi)
        << "</text>\n";
    out << "  <text x=\"" << detail::svg_number(legend_x + 22.0) << "\" y=\""
        << detail::svg_number(margin_top + plot_h)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(c_lo)
        << "</text>\n";
  } else {
    double ly = margin_top;
    for (const auto& name : category_names) {
      const auto& palette = detail::categorical_palette();
      out << "  <rect x=\"" << detail::svg_number(legend_x) << "\" y=\""
          << detail::svg_number(ly) << "\" width=\"12\" height=\"12\" fill=\""
          << palette[category_order[name] % palette.size()] << "\"/>\n";
      out << "  <text x=\"" << detail::svg_number(legend_x + 18.0) << "\" y=\""
          << detail::svg_number(ly + 10.0) << "\" font-family=\"sans-serif\" font-size=\"11\">"
          << detail::xml_escape(name) << "</text>\n";
      ly += 18.0;
    }
  }
  out << "</svg>\n";
}

}  // namespace faultmap
