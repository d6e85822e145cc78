#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "abslab/csv.hpp"
#include "abslab/errors.hpp"

namespace abslab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotDocument {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;

  void validate() const {
    if (series.empty()) throw ConfigError("plot has no series");
    for (const auto& s : series) {
      if (s.x.size() != s.y.size()) throw ConfigError("plot series '" + s.label + "': x/y length mismatch");
      if (s.x.empty()) throw ConfigError("plot series '" + s.label + "' is empty");
    }
  }
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
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

// Round step (1, 2 or 5 times a power of ten) giving about n ticks over span.
inline double nice_step(double span, int n) {
  const double raw = span / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

inline std::string render_svg(const PlotDocument& doc) {
  doc.validate();
  constexpr double W = 800, H = 500, L = 80, R = 170, T = 50, B = 60;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : doc.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - L - R, ph = H - T - B;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return T + (y1 - y) / (y1 - y0) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
     << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
     << detail::xml_escape(doc.title) << "</text>\n";
  os << "<g class=\"axes\" stroke=\"black\">\n"
     << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph << "\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\"/>\n";
  const double xs = detail::nice_step(x1 - x0, 8), ys = detail::nice_step(y1 - y0, 6);
  std::ostringstream labels;
  for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-9 * xs; v += xs) {
    os << "<line x1=\"" << px(v) << "\" y1=\"" << T + ph << "\" x2=\"" << px(v) << "\" y2=\"" << T + ph + 5
       << "\"/>\n";
    labels << "<text x=\"" << px(v) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
           << detail::num(std::abs(v) < 1e-12 * xs ? 0.0 : v) << "</text>\n";
  }
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-9 * ys; v += ys) {
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << py(v) << "\" x2=\"" << L << "\" y2=\"" << py(v) << "\"/>\n";
    labels << "<text x=\"" << L - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
           << detail::num(std::abs(v) < 1e-12 * ys ? 0.0 : v) << "</text>\n";
  }
  os << "</g>\n" << labels.str();
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(doc.x_label) << "</text>\n"
     << "<text transform=\"translate(20," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::xml_escape(doc.y_label) << "</text>\n";

  for (std::size_t k = 0; k < doc.series.size(); ++k) {
    const auto& s = doc.series[k];
    const char* color = palette[k % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!first) os << ' ';
      os << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i]));
      first = false;
    }
    os << "\"/>\n";
    const double ly = T + 10 + 20.0 * k;
    os << "<g class=\"legend\"><line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 40
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
       << "<text x=\"" << L + pw + 46 << "\" y=\"" << ly + 4 << "\">" << detail::xml_escape(s.label)
       << "</text></g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void emit_plot(const PlotDocument& doc, const std::string& path) {
  const std::string svg = render_svg(doc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plot: " + path);
  out << svg;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace abslab
