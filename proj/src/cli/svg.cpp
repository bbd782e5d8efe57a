#include "shds/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "shds/cli/output.hpp"

namespace shds::cli {

std::vector<std::size_t> decimate(std::size_t size, std::size_t max_points) {
    std::vector<std::size_t> idx;
    if (size == 0) {
        return idx;
    }
    const std::size_t cap = std::max<std::size_t>(max_points, 2);
    const std::size_t stride = size <= cap ? 1 : (size - 1) / cap + 1;
    for (std::size_t i = 0; i < size; i += stride) {
        idx.push_back(i);
    }
    if (idx.back() != size - 1) {
        idx.push_back(size - 1);
    }
    return idx;
}

namespace {

constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 45.0;
constexpr int kTicks = 5;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finalize(double pad_fraction) {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = (hi - lo) * pad_fraction;
        lo -= pad;
        hi += pad;
    }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, const SvgLayout& layout) {
    const double total_height = layout.panel_height * static_cast<double>(panels.size());
    std::ostringstream os;
    os << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n';
    os << R"(<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width=")" << format_fixed(layout.width, 0)
       << R"(" height=")" << format_fixed(total_height, 0) << R"(" font-family="sans-serif" font-size="12">)" << '\n';
    os << R"(<rect x="0" y="0" width="100%" height="100%" fill="white"/>)" << '\n';

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& panel = panels[p];
        const double top = layout.panel_height * static_cast<double>(p);
        const double x0 = kMarginLeft;
        const double x1 = layout.width - kMarginRight;
        const double y0 = top + kMarginTop;
        const double y1 = top + layout.panel_height - kMarginBottom;

        Range tr;
        Range yr;
        for (const auto& trace : panel.traces) {
            for (double t : trace.t) {
                tr.include(t);
            }
            for (double y : trace.y) {
                yr.include(y);
            }
        }
        tr.finalize(0.0);
        yr.finalize(0.05);
        auto px = [&](double t) { return x0 + (t - tr.lo) / (tr.hi - tr.lo) * (x1 - x0); };
        auto py = [&](double y) { return y1 - (y - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

        os << "<g>\n";
        os << R"(<text x=")" << format_fixed((x0 + x1) / 2, 2) << R"(" y=")" << format_fixed(top + 18, 2)
           << R"(" text-anchor="middle" font-size="14">)" << escape(panel.title) << "</text>\n";
        os << R"(<rect x=")" << format_fixed(x0, 2) << R"(" y=")" << format_fixed(y0, 2) << R"(" width=")"
           << format_fixed(x1 - x0, 2) << R"(" height=")" << format_fixed(y1 - y0, 2)
           << R"(" fill="none" stroke="black"/>)" << '\n';
        for (int k = 0; k <= kTicks; ++k) {
            const double tv = tr.lo + (tr.hi - tr.lo) * k / kTicks;
            const double yv = yr.lo + (yr.hi - yr.lo) * k / kTicks;
            os << R"(<line x1=")" << format_fixed(px(tv), 2) << R"(" y1=")" << format_fixed(y1, 2) << R"(" x2=")"
               << format_fixed(px(tv), 2) << R"(" y2=")" << format_fixed(y1 + 5, 2) << R"(" stroke="black"/>)";
            os << R"(<text x=")" << format_fixed(px(tv), 2) << R"(" y=")" << format_fixed(y1 + 18, 2)
               << R"(" text-anchor="middle">)" << format_fixed(tv, 2) << "</text>\n";
            os << R"(<line x1=")" << format_fixed(x0 - 5, 2) << R"(" y1=")" << format_fixed(py(yv), 2) << R"(" x2=")"
               << format_fixed(x0, 2) << R"(" y2=")" << format_fixed(py(yv), 2) << R"(" stroke="black"/>)";
            os << R"(<text x=")" << format_fixed(x0 - 8, 2) << R"(" y=")" << format_fixed(py(yv) + 4, 2)
               << R"(" text-anchor="end">)" << format_fixed(yv, 2) << "</text>\n";
        }
        os << R"(<text x=")" << format_fixed((x0 + x1) / 2, 2) << R"(" y=")"
           << format_fixed(top + layout.panel_height - 8, 2) << R"(" text-anchor="middle">)"
           << escape(panel.x_label) << "</text>\n";
        os << R"(<text x="16" y=")" << format_fixed((y0 + y1) / 2, 2) << R"(" text-anchor="middle" transform="rotate(-90 16 )"
           << format_fixed((y0 + y1) / 2, 2) << ")\">" << escape(panel.y_label) << "</text>\n";

        for (const auto& trace : panel.traces) {
            const auto n = std::min(trace.t.size(), trace.y.size());
            if (n == 0) {
                continue;
            }
            os << R"(<polyline fill="none" stroke=")" << trace.style.stroke << R"(" stroke-width=")"
               << format_fixed(trace.style.width, 2) << R"(" stroke-opacity=")"
               << format_fixed(trace.style.opacity, 2) << R"(" points=")";
            bool first = true;
            for (std::size_t i : decimate(n, layout.max_points)) {
                if (!first) {
                    os << ' ';
                }
                first = false;
                os << format_fixed(px(trace.t[i]), 2) << ',' << format_fixed(py(trace.y[i]), 2);
            }
            os << R"("/>)" << '\n';
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace shds::cli
