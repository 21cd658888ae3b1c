#include "lbvae/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lbvae::svg {

namespace {

// Sampled viridis stops.
constexpr std::array<std::array<int, 3>, 9> kStops{{{68, 1, 84},
                                                   {71, 44, 122},
                                                   {59, 81, 139},
                                                   {44, 113, 142},
                                                   {33, 144, 141},
                                                   {39, 173, 129},
                                                   {92, 200, 99},
                                                   {170, 220, 50},
                                                   {253, 231, 37}}};

std::string escape(const std::string &text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string value_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

std::string viridis(double t) {
    if (!std::isfinite(t)) { t = 0.0; }
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * static_cast<double>(kStops.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, kStops.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    char buf[8];
    int rgb[3];
    for (int k = 0; k < 3; ++k) {
        rgb[k] = static_cast<int>(std::lround(kStops[lo][k] + frac * (kStops[hi][k] - kStops[lo][k])));
    }
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string render(const Heatmap &map) {
    constexpr int cell_w = 80;
    constexpr int cell_h = 36;
    constexpr int left = 110;
    constexpr int top = 50;
    const int rows = static_cast<int>(map.values.size());
    const int cols = rows > 0 ? static_cast<int>(map.values.front().size()) : 0;
    const int width = left + cols * cell_w + 20;
    const int height = top + rows * cell_h + 40;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto &row : map.values) {
        for (double v : row) {
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << escape(map.title) << "</text>\n";
    for (int c = 0; c < cols; ++c) {
        const std::string label = c < static_cast<int>(map.col_labels.size()) ? map.col_labels[c] : "";
        out << "<text x=\"" << left + c * cell_w + cell_w / 2 << "\" y=\"" << top - 6
            << "\" text-anchor=\"middle\">" << escape(label) << "</text>\n";
    }
    for (int r = 0; r < rows; ++r) {
        const std::string label = r < static_cast<int>(map.row_labels.size()) ? map.row_labels[r] : "";
        out << "<text x=\"" << left - 6 << "\" y=\"" << top + r * cell_h + cell_h / 2 + 4
            << "\" text-anchor=\"end\">" << escape(label) << "</text>\n";
        for (int c = 0; c < cols; ++c) {
            const double v = c < static_cast<int>(map.values[r].size()) ? map.values[r][c]
                                                                         : std::numeric_limits<double>::quiet_NaN();
            const int x = left + c * cell_w;
            const int y = top + r * cell_h;
            std::string fill = "#cccccc";
            if (std::isfinite(v)) { fill = viridis(hi > lo ? (v - lo) / (hi - lo) : 0.0); }
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\"" << cell_h
                << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
            if (std::isfinite(v)) {
                out << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 4
                    << "\" text-anchor=\"middle\" fill=\"" << (hi > lo && (v - lo) / (hi - lo) > 0.6 ? "black" : "white")
                    << "\">" << value_label(v) << "</text>\n";
            }
        }
    }
    if (map.marked_row >= 0 && map.marked_col >= 0 && map.marked_row < rows && map.marked_col < cols) {
        out << "<rect x=\"" << left + map.marked_col * cell_w + 2 << "\" y=\"" << top + map.marked_row * cell_h + 2
            << "\" width=\"" << cell_w - 4 << "\" height=\"" << cell_h - 4
            << "\" fill=\"none\" stroke=\"red\" stroke-width=\"3\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace lbvae::svg
