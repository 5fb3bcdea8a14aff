// plot.hpp - static SVG line charts and heatmaps.
#pragma once

#include <string>
#include <vector>

namespace matsg::harness {

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::vector<double> spread;  // optional +/- band, same length as y
};

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

// NaN cells are drawn empty.
std::string heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels, const std::vector<std::vector<double>>& cells);

}  // namespace matsg::harness
