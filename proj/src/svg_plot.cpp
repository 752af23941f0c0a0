#include "quadplan/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>

namespace quadplan {

namespace {

constexpr double kHuge = 1e300;  // samples at/above this are treated as sentinels

bool usable(double v) { return std::isfinite(v) && std::fabs(v) < kHuge; }

void appendf(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  out += buf;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series,
                       const std::vector<PlotCircle>& circles, const PlotConfig& cfg) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const PlotSeries& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!usable(s.x[i]) || !usable(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  for (const PlotCircle& c : circles) {
    if (!usable(c.cx) || !usable(c.cy) || !usable(c.r)) continue;
    x0 = std::min(x0, c.cx - c.r);
    x1 = std::max(x1, c.cx + c.r);
    y0 = std::min(y0, c.cy - c.r);
    y1 = std::max(y1, c.cy + c.r);
  }
  if (!(x0 <= x1)) {
    x0 = 0.0;
    x1 = 1.0;
  }
  if (!(y0 <= y1)) {
    y0 = 0.0;
    y1 = 1.0;
  }
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double p = span > 0.0 ? 0.05 * span : std::max(1.0, std::fabs(lo)) * 0.05;
    lo -= p;
    hi += p;
  };
  pad(x0, x1);
  pad(y0, y1);

  const double ml = 64, mr = 18, mt = 34, mb = 48;
  const double pw = cfg.width - ml - mr, ph = cfg.height - mt - mb;
  if (cfg.equal_aspect) {
    const double sx = pw / (x1 - x0), sy = ph / (y1 - y0);
    if (sx < sy) {
      const double extra = (ph / sx - (y1 - y0)) / 2.0;
      y0 -= extra;
      y1 += extra;
    } else {
      const double extra = (pw / sy - (x1 - x0)) / 2.0;
      x0 -= extra;
      x1 += extra;
    }
  }
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

  std::string out;
  appendf(out,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
          "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"12\">\n",
          cfg.width, cfg.height, cfg.width, cfg.height);
  appendf(out, "<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", cfg.width, cfg.height);

  for (int i = 0; i <= 5; ++i) {
    const double fx = x0 + (x1 - x0) * i / 5.0;
    const double fy = y0 + (y1 - y0) * i / 5.0;
    appendf(out,
            "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#eeeeee\"/>\n",
            px(fx), py(y0), px(fx), py(y1));
    appendf(out,
            "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#eeeeee\"/>\n",
            px(x0), py(fy), px(x1), py(fy));
    appendf(out, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n", px(fx),
            mt + ph + 18.0, fx);
    appendf(out, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", ml - 6.0,
            py(fy) + 4.0, fy);
  }
  appendf(out,
          "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
          "stroke=\"#333333\"/>\n",
          ml, mt, pw, ph);

  for (const PlotCircle& c : circles) {
    if (!usable(c.cx) || !usable(c.cy) || !usable(c.r)) continue;
    const double rpx = c.r / (x1 - x0) * pw;
    appendf(out,
            "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" stroke=\"%s\"/>\n",
            px(c.cx), py(c.cy), rpx, c.fill.c_str(), c.stroke.c_str());
  }

  for (const PlotSeries& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    std::string points;
    bool open = false;
    auto flush = [&]() {
      if (open && !points.empty())
        appendf(out,
                "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"%.2f\"/>\n",
                points.c_str(), s.color.c_str(), s.width);
      points.clear();
      open = false;
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!usable(s.x[i]) || !usable(s.y[i])) {
        flush();
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      points += buf;
      open = true;
    }
    flush();
  }

  double ly = mt + 16.0;
  for (const PlotSeries& s : series) {
    if (s.label.empty()) continue;
    appendf(out,
            "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
            "stroke-width=\"2\"/>\n",
            ml + pw - 150.0, ly - 4.0, ml + pw - 126.0, ly - 4.0, s.color.c_str());
    appendf(out, "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n", ml + pw - 120.0, ly,
            s.label.c_str());
    ly += 16.0;
  }

  appendf(out, "<text x=\"%.1f\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
          ml + pw / 2.0, cfg.title.c_str());
  appendf(out, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", ml + pw / 2.0,
          mt + ph + 38.0, cfg.xlabel.c_str());
  appendf(out,
          "<text x=\"16\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
          "%.1f)\">%s</text>\n",
          mt + ph / 2.0, mt + ph / 2.0, cfg.ylabel.c_str());
  out += "</svg>\n";
  return out;
}

}  // namespace quadplan
