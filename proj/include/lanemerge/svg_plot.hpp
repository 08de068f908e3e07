#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace lanemerge::svg {

// Small self-contained SVG polyline plot: auto-scaled axes, ticks, legend.
class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label,
           int width = 860, int height = 420)
      : title_(std::move(title)), x_label_(std::move(x_label)),
        y_label_(std::move(y_label)), width_(width), height_(height) {}

  void add_series(std::string name, std::vector<double> xs,
                  std::vector<double> ys, std::string color,
                  bool dashed = false) {
    series_.push_back({std::move(name), std::move(xs), std::move(ys),
                       std::move(color), dashed});
  }

  std::string render() const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    for (const auto& s : series_) {
      for (double v : s.xs) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
      for (double v : s.ys) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
    }
    if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
    if (x1 - x0 < 1e-9) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }
    const double ypad = 0.06 * (y1 - y0);
    y0 -= ypad;
    y1 += ypad;

    const double ml = 70, mr = 20, mt = 40, mb = 55;
    const double pw = width_ - ml - mr;
    const double ph = height_ - mt - mb;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };

    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                  "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  width_, height_, width_, height_);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"22\" font-family=\"sans-serif\" "
                  "font-size=\"15\" text-anchor=\"middle\">%s</text>\n",
                  ml + pw / 2, title_.c_str());
    out += buf;

    // axes box and ticks
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                  "fill=\"none\" stroke=\"#444\"/>\n",
                  ml, mt, pw, ph);
    out += buf;
    for (int i = 0; i <= 5; ++i) {
      const double fx = x0 + (x1 - x0) * i / 5.0;
      const double fy = y0 + (y1 - y0) * i / 5.0;
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                    "stroke=\"#ccc\" stroke-dasharray=\"3,3\"/>\n",
                    px(fx), mt, px(fx), mt + ph);
      out += buf;
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                    "font-size=\"11\" text-anchor=\"middle\">%.3g</text>\n",
                    px(fx), mt + ph + 16, fx);
      out += buf;
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                    "stroke=\"#ccc\" stroke-dasharray=\"3,3\"/>\n",
                    ml, py(fy), ml + pw, py(fy));
      out += buf;
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                    "font-size=\"11\" text-anchor=\"end\">%.3g</text>\n",
                    ml - 6, py(fy) + 4, fy);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                  ml + pw / 2, mt + ph + 40.0, x_label_.c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"18\" y=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"13\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 18 %.0f)\">%s</text>\n",
                  mt + ph / 2, mt + ph / 2, y_label_.c_str());
    out += buf;

    for (const auto& s : series_) {
      std::string pts;
      char p[64];
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        std::snprintf(p, sizeof(p), "%.1f,%.1f ", px(s.xs[i]), py(s.ys[i]));
        pts += p;
      }
      std::snprintf(buf, sizeof(buf),
                    "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.6\"%s "
                    "points=\"%s\"/>\n",
                    s.color.c_str(),
                    s.dashed ? " stroke-dasharray=\"6,4\"" : "",
                    pts.c_str());
      if (pts.size() + 160 < sizeof(buf)) {
        out += buf;
      } else {
        out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.6\"";
        if (s.dashed) out += " stroke-dasharray=\"6,4\"";
        out += " points=\"" + pts + "\"/>\n";
      }
    }

    // legend
    double ly = mt + 14;
    for (const auto& s : series_) {
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                    "stroke=\"%s\" stroke-width=\"2\"%s/>"
                    "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                    "font-size=\"12\">%s</text>\n",
                    ml + pw - 150, ly, ml + pw - 120, ly, s.color.c_str(),
                    s.dashed ? " stroke-dasharray=\"6,4\"" : "", ml + pw - 112,
                    ly + 4, s.name.c_str());
      out += buf;
      ly += 18;
    }
    out += "</svg>\n";
    return out;
  }

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
    std::string color;
    bool dashed = false;
  };

  std::string title_, x_label_, y_label_;
  int width_, height_;
  std::vector<Series> series_;
};

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

} // namespace lanemerge::svg
