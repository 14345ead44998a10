#pragma once

// Self-contained SVG line plots of a column table: the first column is the
// abscissa, every further column one series.

#include <string>
#include <vector>

namespace nqm {

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string render_svg(const LinePlot& plot);

}  // namespace nqm
