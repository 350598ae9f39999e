#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gih/matrix.hpp"

namespace gih::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Self-contained SVG line chart: axes, ticks, one polyline per series, and a
// legend. Throws on empty input.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

// Heatmap of a matrix as a cell grid. The color scale is a diverging palette
// symmetric around 0, so sign structure is visible and the largest |value| is
// darkest.
void write_heatmap(const std::filesystem::path& path, const std::string& title, const Matrix& m);

}  // namespace gih::svg
