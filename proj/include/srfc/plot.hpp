#pragma once
//------------------------------------------------------------------------------
// Static SVG charts for run bundles: a trajectory overlay and stacked
// time-series panels.
//------------------------------------------------------------------------------
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "srfc/geometry.hpp"
#include "srfc/world.hpp"

namespace srfc::plot {

inline const char* color(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[k % (sizeof palette / sizeof palette[0])];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Widens empty or zero-width ranges so a single point still renders.
  Range padded(double frac = 0.05) const {
    Range r = *this;
    if (!(r.lo <= r.hi)) return {0.0, 1.0};
    if (r.hi - r.lo < 1e-12) {
      const double w = std::max(1.0, std::abs(r.lo)) * 0.5;
      return {r.lo - w, r.hi + w};
    }
    const double pad = (r.hi - r.lo) * frac;
    return {r.lo - pad, r.hi + pad};
  }
};

inline std::vector<double> ticks(const Range& r, int target = 6) {
  const double span = r.hi - r.lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-9 * step; v += step)
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return out;
}

struct Frame {
  double left, top, width, height;
  Range x, y;
  double sx(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * width; }
  double sy(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }
};

inline std::string header(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
         std::to_string(h) +
         "\">\n<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<style>\n"
         "  .axis { stroke:#000; stroke-width:1; fill:none; }\n"
         "  .grid { stroke:#e0e0e0; stroke-width:1; }\n"
         "  .label { font-family: Arial, sans-serif; font-size: 12px; fill:#000; }\n"
         "  .title { font-family: Arial, sans-serif; font-size: 14px; font-weight:bold; fill:#000; }\n"
         "  .target { fill:#2ca02c; fill-opacity:0.25; stroke:#2ca02c; stroke-width:1.5; }\n"
         "  .obstacle { fill:#8b0000; fill-opacity:0.6; stroke:#8b0000; stroke-width:1.5; }\n"
         "  .formation { stroke:#000; stroke-width:1; stroke-dasharray:4 3; fill:none; }\n"
         "</style>\n";
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s;
  for (double v : ticks(f.x)) {
    s += "<line class=\"grid\" x1=\"" + num(f.sx(v)) + "\" y1=\"" + num(f.top) + "\" x2=\"" + num(f.sx(v)) +
         "\" y2=\"" + num(f.top + f.height) + "\"/>\n";
    s += "<text class=\"label\" text-anchor=\"middle\" x=\"" + num(f.sx(v)) + "\" y=\"" +
         num(f.top + f.height + 16) + "\">" + num(v) + "</text>\n";
  }
  for (double v : ticks(f.y)) {
    s += "<line class=\"grid\" x1=\"" + num(f.left) + "\" y1=\"" + num(f.sy(v)) + "\" x2=\"" +
         num(f.left + f.width) + "\" y2=\"" + num(f.sy(v)) + "\"/>\n";
    s += "<text class=\"label\" text-anchor=\"end\" x=\"" + num(f.left - 6) + "\" y=\"" + num(f.sy(v) + 4) +
         "\">" + num(v) + "</text>\n";
  }
  s += "<rect class=\"axis\" x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) +
       "\" height=\"" + num(f.height) + "\"/>\n";
  s += "<text class=\"label\" text-anchor=\"middle\" x=\"" + num(f.left + f.width / 2) + "\" y=\"" +
       num(f.top + f.height + 36) + "\">" + escape(xlabel) + "</text>\n";
  s += "<text class=\"label\" text-anchor=\"middle\" transform=\"translate(" + num(f.left - 58) + "," +
       num(f.top + f.height / 2) + ") rotate(-90)\">" + escape(ylabel) + "</text>\n";
  return s;
}

inline std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y,
                            const char* stroke, std::size_t max_points = 4000) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return {};
  const std::size_t stride = std::max<std::size_t>(1, n / max_points);
  std::string pts;
  for (std::size_t k = 0; k < n; k += stride) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k])) continue;
    pts += num(f.sx(x[k])) + "," + num(f.sy(y[k])) + " ";
  }
  if (n > 1 && (n - 1) % stride != 0 && std::isfinite(x[n - 1]) && std::isfinite(y[n - 1]))
    pts += num(f.sx(x[n - 1])) + "," + num(f.sy(y[n - 1]));
  if (n == 1)
    return "<circle cx=\"" + num(f.sx(x[0])) + "\" cy=\"" + num(f.sy(y[0])) + "\" r=\"3\" fill=\"" + stroke +
           "\"/>\n";
  return "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
}

struct Series {
  std::string name;
  std::vector<double> y;
};

struct Panel {
  std::string ylabel;
  std::vector<Series> series;
};

// Vertically stacked panels sharing one time axis.
inline std::string time_series(const std::string& title, const std::vector<double>& t,
                               const std::vector<Panel>& panels) {
  const int width = 760;
  const int panel_h = 240;
  const int height = 50 + static_cast<int>(panels.size()) * (panel_h + 60);
  std::string s = header(width, height);
  s += "<text class=\"title\" x=\"" + num(width / 2.0) + "\" y=\"24\" text-anchor=\"middle\">" + escape(title) +
       "</text>\n";
  Range xr;
  for (double v : t) xr.include(v);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    Range yr;
    for (const auto& ser : panels[p].series)
      for (double v : ser.y) yr.include(v);
    const Frame f{80.0, 50.0 + p * (panel_h + 60.0), width - 200.0, static_cast<double>(panel_h), xr.padded(0.0),
                  yr.padded()};
    s += axes(f, "t [s]", panels[p].ylabel);
    for (std::size_t k = 0; k < panels[p].series.size(); ++k) {
      const auto& ser = panels[p].series[k];
      s += polyline(f, t, ser.y, color(k));
      s += "<text class=\"label\" x=\"" + num(f.left + f.width + 12) + "\" y=\"" + num(f.top + 14 + 16.0 * k) +
           "\" fill=\"" + color(k) + "\">" + escape(ser.name) + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

inline std::string region_shape(const Frame& f, const ConvexRegion& r, const char* cls) {
  if (r.is_circle()) {
    const auto& c = r.as_circle();
    const double rx = c.radius / (f.x.hi - f.x.lo) * f.width;
    const double ry = c.radius / (f.y.hi - f.y.lo) * f.height;
    return "<ellipse class=\"" + std::string(cls) + "\" cx=\"" + num(f.sx(c.center.x)) + "\" cy=\"" +
           num(f.sy(c.center.y)) + "\" rx=\"" + num(rx) + "\" ry=\"" + num(ry) + "\"/>\n";
  }
  std::string pts;
  for (const auto& v : r.as_polygon().vertices) pts += num(f.sx(v.x)) + "," + num(f.sy(v.y)) + " ";
  return "<polygon class=\"" + std::string(cls) + "\" points=\"" + pts + "\"/>\n";
}

inline void include_region(Range& xr, Range& yr, const ConvexRegion& r) {
  if (r.is_circle()) {
    const auto& c = r.as_circle();
    xr.include(c.center.x - c.radius);
    xr.include(c.center.x + c.radius);
    yr.include(c.center.y - c.radius);
    yr.include(c.center.y + c.radius);
  } else {
    for (const auto& v : r.as_polygon().vertices) {
      xr.include(v.x);
      yr.include(v.y);
    }
  }
}

// Paths of every agent over the target and obstacles, with the desired
// formation drawn dashed at the final positions.
inline std::string trajectory(const std::string& title, const Scenario& scenario,
                              const std::vector<std::vector<Vec2>>& paths) {
  Range xr, yr;
  include_region(xr, yr, scenario.target);
  for (const auto& o : scenario.obstacles) include_region(xr, yr, o);
  for (const auto& path : paths)
    for (const auto& p : path) {
      xr.include(p.x);
      yr.include(p.y);
    }
  xr = xr.padded();
  yr = yr.padded();
  // equal aspect
  const double side = 600.0;
  const double span = std::max(xr.hi - xr.lo, yr.hi - yr.lo);
  const double cx = 0.5 * (xr.lo + xr.hi), cy = 0.5 * (yr.lo + yr.hi);
  xr = {cx - span / 2, cx + span / 2};
  yr = {cy - span / 2, cy + span / 2};
  const Frame f{80.0, 50.0, side, side, xr, yr};

  std::string s = header(static_cast<int>(side) + 200, static_cast<int>(side) + 110);
  s += "<text class=\"title\" x=\"" + num(80 + side / 2) + "\" y=\"24\" text-anchor=\"middle\">" + escape(title) +
       "</text>\n";
  s += axes(f, "x [m]", "y [m]");
  s += region_shape(f, scenario.target, "target");
  for (const auto& o : scenario.obstacles) s += region_shape(f, o, "obstacle");

  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::vector<double> x, y;
    for (const auto& p : paths[i]) {
      x.push_back(p.x);
      y.push_back(p.y);
    }
    s += polyline(f, x, y, color(i));
    if (!paths[i].empty()) {
      const auto& a = paths[i].front();
      const auto& b = paths[i].back();
      s += "<circle cx=\"" + num(f.sx(a.x)) + "\" cy=\"" + num(f.sy(a.y)) + "\" r=\"3\" fill=\"none\" stroke=\"" +
           color(i) + "\"/>\n";
      s += "<circle cx=\"" + num(f.sx(b.x)) + "\" cy=\"" + num(f.sy(b.y)) + "\" r=\"4\" fill=\"" + color(i) + "\"/>\n";
      const bool leader = i < scenario.agents.size() && scenario.agents[i].is_leader;
      s += "<text class=\"label\" x=\"" + num(f.left + f.width + 12) + "\" y=\"" + num(f.top + 14 + 16.0 * i) +
           "\" fill=\"" + color(i) + "\">agent " + std::to_string(i) + (leader ? " (leader)" : "") + "</text>\n";
    }
  }

  // Formation edges between the final positions.
  const auto& targets = scenario.formation.target_positions;
  if (targets.size() == paths.size()) {
    for (std::size_t i = 0; i < targets.size(); ++i)
      for (std::size_t j = i + 1; j < targets.size(); ++j) {
        if (paths[i].empty() || paths[j].empty()) continue;
        if (!(norm(targets[i] - targets[j]) < scenario.params.r - scenario.params.epsilon)) continue;
        const Vec2 a = paths[i].back();
        const Vec2 b = paths[j].back();
        s += "<line class=\"formation\" x1=\"" + num(f.sx(a.x)) + "\" y1=\"" + num(f.sy(a.y)) + "\" x2=\"" +
             num(f.sx(b.x)) + "\" y2=\"" + num(f.sy(b.y)) + "\"/>\n";
      }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace srfc::plot
