#pragma once

// Minimal static SVG line/scatter charts with optional error bars.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cei {

struct SvgPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> low;   // error bar bottom
  std::optional<double> high;  // error bar top
};

struct SvgSeries {
  std::string name;
  std::vector<SvgPoint> points;
  bool line = true;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v, int precision = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

inline double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

struct SvgChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
  std::vector<std::pair<double, std::string>> x_ticks;  // replaces numeric x ticks when set
  std::optional<std::pair<double, double>> y_range;
  bool identity_line = false;  // y = x reference for paired scatter plots
  int width = 640;
  int height = 420;

  std::string render() const {
    using detail::fmt;
    const double left = 70, right = 150, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
      for (const auto& p : s.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
        x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
        y0 = std::min({y0, p.y, p.low.value_or(p.y)});
        y1 = std::max({y1, p.y, p.high.value_or(p.y)});
      }
    }
    for (const auto& [x, label] : x_ticks) { x0 = std::min(x0, x); x1 = std::max(x1, x); }
    if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
    if (identity_line) { x0 = y0 = std::min(x0, y0); x1 = y1 = std::max(x1, y1); }
    if (y_range) { y0 = y_range->first; y1 = y_range->second; }
    if (x1 - x0 < 1e-12) { x0 -= 1; x1 += 1; }
    if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
    const double xpad = 0.05 * (x1 - x0), ypad = 0.05 * (y1 - y0);
    x0 -= xpad; x1 += xpad;
    if (!y_range) { y0 -= ypad; y1 += ypad; }

    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::xml_escape(title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    const double ystep = detail::nice_step(y1 - y0, 6);
    for (double y = std::ceil(y0 / ystep) * ystep; y <= y1 + 1e-12; y += ystep) {
      o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << fmt(sy(y)) << "\" y2=\""
        << fmt(sy(y)) << "\" stroke=\"#ddd\"/>\n";
      o << "<text x=\"" << left - 6 << "\" y=\"" << fmt(sy(y) + 4) << "\" text-anchor=\"end\">"
        << fmt(std::abs(y) < 1e-12 ? 0.0 : y, ystep < 0.1 ? 3 : 2) << "</text>\n";
    }
    auto x_tick = [&](double x, const std::string& label) {
      o << "<line x1=\"" << fmt(sx(x)) << "\" x2=\"" << fmt(sx(x)) << "\" y1=\"" << top + ph << "\" y2=\""
        << top + ph + 5 << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << fmt(sx(x)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << detail::xml_escape(label) << "</text>\n";
    };
    if (!x_ticks.empty()) {
      for (const auto& [x, label] : x_ticks) x_tick(x, label);
    } else {
      const double xstep = detail::nice_step(x1 - x0, 8);
      for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-12; x += xstep) {
        x_tick(x, fmt(std::abs(x) < 1e-12 ? 0.0 : x, xstep < 1 ? 2 : 0));
      }
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << detail::xml_escape(x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::xml_escape(y_label) << "</text>\n";

    if (identity_line) {
      o << "<line x1=\"" << fmt(sx(x0)) << "\" y1=\"" << fmt(sy(x0)) << "\" x2=\"" << fmt(sx(x1)) << "\" y2=\""
        << fmt(sy(x1)) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
    }

    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& s = series[i];
      const char* color = palette[i % 7];
      std::vector<SvgPoint> pts;
      for (const auto& p : s.points) {
        if (std::isfinite(p.x) && std::isfinite(p.y)) pts.push_back(p);
      }
      if (s.line && pts.size() > 1) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : pts) o << fmt(sx(p.x)) << ',' << fmt(sy(p.y)) << ' ';
        o << "\"/>\n";
      }
      for (const auto& p : pts) {
        if (p.low && p.high) {
          o << "<line x1=\"" << fmt(sx(p.x)) << "\" x2=\"" << fmt(sx(p.x)) << "\" y1=\"" << fmt(sy(*p.low))
            << "\" y2=\"" << fmt(sy(*p.high)) << "\" stroke=\"" << color << "\"/>\n";
        }
        o << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.y)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      }
      const double ly = top + 14 + 18.0 * static_cast<double>(i);
      o << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
      o << "<text x=\"" << left + pw + 28 << "\" y=\"" << ly << "\">" << detail::xml_escape(s.name)
        << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
  }
};

}  // namespace cei
