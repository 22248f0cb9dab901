#pragma once

#include <string>
#include <vector>

#include "smx/errors.hpp"

namespace smx {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Simple line chart with axes, ticks, and a legend.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series);

// Row-major matrix rendered as colored cells with a value legend.
void write_heatmap_svg(const std::string& path, const std::string& title,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<double>>& values);

}  // namespace smx
