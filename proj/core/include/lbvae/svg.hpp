#pragma once

#include <string>
#include <vector>

namespace lbvae::svg {

/// Minimal heatmap emitter: rectangles, labels, fixed viridis-like palette.
struct Heatmap {
    std::string title;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    /// values[row][col]; NaN renders as an empty grey cell.
    std::vector<std::vector<double>> values;
    int marked_row = -1;
    int marked_col = -1;
};

std::string render(const Heatmap &map);

/// Palette lookup for t in [0, 1].
std::string viridis(double t);

}  // namespace lbvae::svg
