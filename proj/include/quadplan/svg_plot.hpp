#pragma once

#include <string>
#include <vector>

namespace quadplan {

struct PlotSeries {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  double width = 1.5;
  std::string label;
};

struct PlotCircle {
  double cx = 0.0, cy = 0.0, r = 1.0;
  std::string stroke = "#555555";
  std::string fill = "#d9d9d9";
};

struct PlotConfig {
  std::string title, xlabel, ylabel;
  int width = 860;
  int height = 520;
  bool equal_aspect = false;  // for top-down views with circles
};

/* Self-contained SVG line chart; non-finite or absurdly large samples are
 * dropped so sentinel values in the logs cannot blow up the axis ranges. */
std::string render_svg(const std::vector<PlotSeries>& series,
                       const std::vector<PlotCircle>& circles, const PlotConfig& cfg);

}  // namespace quadplan
