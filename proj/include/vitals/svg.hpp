#pragma once

// Minimal SVG line and scatter plots for debug output.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vitals/io.hpp"

namespace vitals::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;  // scatter instead of polyline
};

struct HLine {
  std::string label;
  double y = 0.0;
  std::string color = "#d62728";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<HLine> lines;
  int width = 900;
  int height = 360;
};

inline std::string escape(std::string_view s) {
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

inline std::string render(const Plot& p) {
  constexpr double ml = 60, mr = 20, mt = 30, mb = 40;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : p.series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  for (const auto& l : p.lines) y0 = std::min(y0, l.y), y1 = std::max(y1, l.y);
  if (!(x0 < x1)) x0 -= 1.0, x1 += 1.0;
  if (!(y0 < y1)) y0 -= 1.0, y1 += 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double w = p.width - ml - mr, h = p.height - mt - mb;
  auto px = [&](double x) { return format_number(std::round((ml + (x - x0) / (x1 - x0) * w) * 10.0) / 10.0); };
  auto py = [&](double y) { return format_number(std::round((mt + (y1 - y) / (y1 - y0) * h) * 10.0) / 10.0); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << p.width / 2 << "\" y=\"18\" text-anchor=\"middle\">" << escape(p.title) << "</text>\n"
    << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w << "\" height=\"" << h
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << p.height - mb + 15 << "\" text-anchor=\"middle\">"
      << format_number(std::round(xv * 100.0) / 100.0) << "</text>\n"
      << "<text x=\"" << ml - 5 << "\" y=\"" << py(yv) << "\" text-anchor=\"end\">"
      << format_number(std::round(yv * 100.0) / 100.0) << "</text>\n";
  }
  o << "<text x=\"" << ml + w / 2 << "\" y=\"" << p.height - 5 << "\" text-anchor=\"middle\">" << escape(p.x_label)
    << "</text>\n"
    << "<text transform=\"translate(14," << mt + h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(p.y_label) << "</text>\n";

  for (const auto& l : p.lines)
    o << "<line x1=\"" << ml << "\" x2=\"" << ml + w << "\" y1=\"" << py(l.y) << "\" y2=\"" << py(l.y)
      << "\" stroke=\"" << l.color << "\" stroke-dasharray=\"6,4\"><title>" << escape(l.label) << "</title></line>\n";
  for (const auto& s : p.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i)
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      continue;
    }
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < n; ++i) o << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
    o << "\"><title>" << escape(s.label) << "</title></polyline>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace vitals::svg
