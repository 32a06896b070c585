#include "intervalbf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace intervalbf::svg {

namespace {

constexpr double kPanelW = 360, kPanelH = 260;
constexpr double kLeft = 56, kRight = 16, kTop = 30, kBottom = 44;
constexpr double kLegendH = 18;
const char* const kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::pair<double, double> pad(double lo, double hi) {
  if (!(lo < hi)) {
    const double w = std::max(std::abs(lo) * 0.1, 0.5);
    return {lo - w, hi + w};
  }
  return {lo, hi};
}

void render_panel(std::string& out, const Panel& p, double ox, double oy) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (p.y_range) std::tie(ymin, ymax) = *p.y_range;
  std::tie(xmin, xmax) = pad(xmin, xmax);
  std::tie(ymin, ymax) = pad(ymin, ymax);

  const double pw = kPanelW - kLeft - kRight;
  const double ph = kPanelH - kTop - kBottom - kLegendH;
  auto sx = [&](double x) { return ox + kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return oy + kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  out += "<g>\n";
  out += "<text x=\"" + num(ox + kPanelW / 2) + "\" y=\"" + num(oy + 18) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(p.title) + "</text>\n";
  out += "<rect x=\"" + num(ox + kLeft) + "\" y=\"" + num(oy + kTop) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(oy + kTop + ph + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + tick_label(xv) + "</text>\n";
    out += "<text x=\"" + num(ox + kLeft - 4) + "\" y=\"" + num(sy(yv) + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + tick_label(yv) + "</text>\n";
  }
  out += "<text x=\"" + num(ox + kLeft + pw / 2) + "\" y=\"" + num(oy + kTop + ph + 30) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + escape(p.x_label) + "</text>\n";
  out += "<text transform=\"translate(" + num(ox + 14) + "," + num(oy + kTop + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" + escape(p.y_label) +
         "</text>\n";
  for (double m : p.x_marks) {
    if (m < xmin || m > xmax) continue;
    out += "<line x1=\"" + num(sx(m)) + "\" y1=\"" + num(oy + kTop) + "\" x2=\"" + num(sx(m)) +
           "\" y2=\"" + num(oy + kTop + ph) + "\" stroke=\"#1f77b4\" stroke-dasharray=\"2,3\"/>\n";
  }

  double legend_x = ox + kLeft;
  const double legend_y = oy + kPanelH - 8;
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const std::string colour = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double y = std::clamp(s.y[i], ymin, ymax);
      pts += num(sx(s.x[i])) + "," + num(sy(y)) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\"" +
           (s.dashed ? " stroke-dasharray=\"5,3\"" : "") + " points=\"" + pts + "\"/>\n";
    out += "<line x1=\"" + num(legend_x) + "\" y1=\"" + num(legend_y - 4) + "\" x2=\"" +
           num(legend_x + 14) + "\" y2=\"" + num(legend_y - 4) + "\" stroke=\"" + colour +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(legend_x + 18) + "\" y=\"" + num(legend_y) +
           "\" font-size=\"10\">" + escape(s.label) + "</text>\n";
    legend_x += 24 + 6.0 * static_cast<double>(s.label.size());
  }
  out += "</g>\n";
}

}  // namespace

std::string render(const std::vector<Panel>& panels, const std::string& title,
                   std::size_t columns) {
  columns = std::max<std::size_t>(1, std::min(columns, std::max<std::size_t>(1, panels.size())));
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double width = kPanelW * static_cast<double>(columns);
  const double height = 30 + kPanelH * static_cast<double>(std::max<std::size_t>(rows, 1));
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
                    "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
                    num(height) + "\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(title) + "</text>\n";
  for (std::size_t i = 0; i < panels.size(); ++i)
    render_panel(out, panels[i], kPanelW * static_cast<double>(i % columns),
                 30 + kPanelH * static_cast<double>(i / columns));
  out += "</svg>\n";
  return out;
}

}  // namespace intervalbf::svg
