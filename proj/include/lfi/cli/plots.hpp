#pragma once

// Minimal self-contained SVG emission: JSD-vs-simulations line charts and
// the sufficiency scatter. Pure text output, no renderer dependency.

#include "lfi/common.hpp"
#include "lfi/eval/metrics.hpp"

#include <string>
#include <vector>

namespace lfi::cli {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Linear-scale line chart with axis ticks and a legend. Non-finite points
// are dropped; a chart with no finite data is an error.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

// One series per method: x = cumulative simulations, y = mean JSD over seeds.
std::vector<Series> jsd_series(const std::vector<eval::RunRecord>& records,
                               const std::string& model);

// Rows of `points` (n x 2) sorted by the first column; the scatter polyline
// follows this order, which is what the monotonicity check reads.
Mat scatter_sorted(const Mat& points);

std::string scatter_svg(const Mat& points, const std::string& title, const std::string& x_label,
                        const std::string& y_label);

}  // namespace lfi::cli
