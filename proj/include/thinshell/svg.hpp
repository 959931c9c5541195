#pragma once

#include <string>
#include <vector>

#include "thinshell/fields.hpp"

namespace thinshell {

/// Self-contained SVG line plot (one or more series over a shared x axis).
void svg_line_plot(const std::string& path, const std::string& title,
                   const std::string& xlabel, const std::string& ylabel,
                   const std::vector<double>& x,
                   const std::vector<std::pair<std::string, std::vector<double>>>& series);

/// Heat map of a chart-grid field (rows = s, columns = theta).
void svg_heatmap(const std::string& path, const std::string& title, const Grid2& values);

}  // namespace thinshell
