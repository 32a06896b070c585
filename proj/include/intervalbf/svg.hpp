#ifndef INTERVALBF_SVG_HPP
#define INTERVALBF_SVG_HPP

// Minimal SVG line charts laid out as a grid of panels.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace intervalbf::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Fixed y range; otherwise fitted to the data.
  std::optional<std::pair<double, double>> y_range;
  /// Vertical reference lines.
  std::vector<double> x_marks;
};

/// Panels are placed row-major, `columns` per row.
std::string render(const std::vector<Panel>& panels, const std::string& title,
                   std::size_t columns = 3);

}  // namespace intervalbf::svg

#endif  // INTERVALBF_SVG_HPP
