#pragma once

// Static SVG 1.1 line plots stacked vertically. Coordinates are written with
// fixed decimals so identical data gives identical bytes.

#include <cstddef>
#include <string>
#include <vector>

namespace shds::cli {

struct TraceStyle {
    std::string stroke = "#1f77b4";
    double width = 1.0;
    double opacity = 1.0;
};

struct Trace {
    std::vector<double> t;
    std::vector<double> y;
    TraceStyle style;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Trace> traces;
};

struct SvgLayout {
    double width = 800.0;
    double panel_height = 320.0;
    std::size_t max_points = 400;  // per trace, after decimation
};

// Keeps every k-th index (k = ceil(size / max_points)) plus the last one.
[[nodiscard]] std::vector<std::size_t> decimate(std::size_t size, std::size_t max_points);

[[nodiscard]] std::string render_svg(const std::vector<Panel>& panels, const SvgLayout& layout = {});

}  // namespace shds::cli
