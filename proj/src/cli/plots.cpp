#include "lfi/cli/plots.hpp"

#include "lfi/infer/rounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lfi::cli {

namespace {

// Legend order matches the summary tables: canonical method order first,
// anything else after it alphabetically.
std::size_t method_order(const std::string& label) {
    const auto& order = infer::all_methods();
    for (std::size_t i = 0; i < order.size(); ++i)
        if (label == infer::method_name(order[i])) return i;
    return order.size();
}

constexpr double kWidth = 720.0, kHeight = 440.0;
constexpr double kLeft = 70.0, kRight = 660.0, kTop = 50.0, kBottom = 390.0;

const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                   "#d62728", "#9467bd", "#8c564b"};
    return colors[i % 6];
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    double to_px(double v, double px_lo, double px_hi) const {
        const double t = (v - lo) / (hi - lo);
        return px_lo + t * (px_hi - px_lo);
    }
};

Range nice_range(double lo, double hi) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return Range{lo - pad, hi + pad};
}

std::string fmt_tick(double v) {
    std::ostringstream out;
    if (std::abs(v) >= 10000.0 || (v != 0.0 && std::abs(v) < 0.001)) {
        out.setf(std::ios::scientific);
        out.precision(1);
    } else {
        out.precision(4);
    }
    out << v;
    return out.str();
}

void emit_frame(std::ostringstream& svg, const Range& xr, const Range& yr,
                const std::string& title, const std::string& x_label,
                const std::string& y_label) {
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kRight - kLeft
        << "\" height=\"" << kBottom - kTop << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        const double xp = xr.to_px(xv, kLeft, kRight);
        const double yp = yr.to_px(yv, kBottom, kTop);
        svg << "<line x1=\"" << xp << "\" y1=\"" << kBottom << "\" x2=\"" << xp << "\" y2=\""
            << kBottom + 5 << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << xp << "\" y=\"" << kBottom + 20
            << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_tick(xv) << "</text>\n";
        svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << yp << "\" x2=\"" << kLeft
            << "\" y2=\"" << yp << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << yp + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_tick(yv) << "</text>\n";
    }
    svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kTop - 20
        << "\" font-size=\"15\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
    svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kBottom + 40
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    svg << "<text x=\"18\" y=\"" << (kTop + kBottom) / 2
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (kTop + kBottom) / 2 << ")\">" << escape(y_label) << "</text>\n";
}

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label) {
    require(!series.empty(), "line_chart_svg: no series");

    std::vector<Series> clean;
    for (const Series& s : series) {
        require(s.x.size() == s.y.size(), "line_chart_svg: x/y length mismatch in " + s.label);
        Series c{s.label, {}, {}};
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                c.x.push_back(s.x[i]);
                c.y.push_back(s.y[i]);
            }
        }
        if (!c.x.empty()) clean.push_back(std::move(c));
    }
    require(!clean.empty(), "line_chart_svg: no finite data points");

    double x_lo = clean[0].x[0], x_hi = x_lo, y_lo = clean[0].y[0], y_hi = y_lo;
    for (const Series& s : clean)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
        }
    const Range xr = nice_range(x_lo, x_hi), yr = nice_range(y_lo, y_hi);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    emit_frame(svg, xr, yr, title, x_label, y_label);

    for (std::size_t k = 0; k < clean.size(); ++k) {
        const Series& s = clean[k];
        svg << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i > 0) svg << ' ';
            svg << xr.to_px(s.x[i], kLeft, kRight) << ',' << yr.to_px(s.y[i], kBottom, kTop);
        }
        svg << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            svg << "<circle cx=\"" << xr.to_px(s.x[i], kLeft, kRight) << "\" cy=\""
                << yr.to_px(s.y[i], kBottom, kTop) << "\" r=\"2.5\" fill=\"" << palette(k)
                << "\"/>\n";
        const double ly = kTop + 16.0 + 16.0 * static_cast<double>(k);
        svg << "<line x1=\"" << kRight - 150 << "\" y1=\"" << ly - 4 << "\" x2=\""
            << kRight - 128 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << palette(k)
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kRight - 122 << "\" y=\"" << ly
            << "\" font-size=\"12\">" << escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<Series> jsd_series(const std::vector<eval::RunRecord>& records,
                               const std::string& model) {
    std::vector<eval::RunRecord> filtered;
    for (const eval::RunRecord& r : records)
        if (r.model == model) filtered.push_back(r);
    require(!filtered.empty(), "jsd_series: no records for model " + model);

    std::vector<eval::CellSummary> cells = eval::aggregate_runs(filtered);
    std::vector<Series> out;
    for (const eval::CellSummary& c : cells) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const Series& s) { return s.label == c.method; });
        if (it == out.end()) {
            out.push_back(Series{c.method, {}, {}});
            it = out.end() - 1;
        }
        it->x.push_back(static_cast<double>(c.sims_cumulative));
        it->y.push_back(c.mean_jsd);
    }
    for (Series& s : out) {
        std::vector<std::size_t> idx(s.x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
        Series sorted{s.label, {}, {}};
        for (std::size_t i : idx) {
            sorted.x.push_back(s.x[i]);
            sorted.y.push_back(s.y[i]);
        }
        s = std::move(sorted);
    }
    std::sort(out.begin(), out.end(), [](const Series& a, const Series& b) {
        const std::size_t ra = method_order(a.label), rb = method_order(b.label);
        return ra != rb ? ra < rb : a.label < b.label;
    });
    return out;
}

Mat scatter_sorted(const Mat& points) {
    require(points.cols() == 2, "scatter_sorted: expected n x 2 points");
    require(points.rows() >= 1, "scatter_sorted: no points");
    std::vector<int> idx(static_cast<std::size_t>(points.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
        return a < b;
    });
    return gather_rows(points, idx);
}

std::string scatter_svg(const Mat& points, const std::string& title, const std::string& x_label,
                        const std::string& y_label) {
    const Mat sorted = scatter_sorted(points);
    const Range xr = nice_range(sorted.col(0).minCoeff(), sorted.col(0).maxCoeff());
    const Range yr = nice_range(sorted.col(1).minCoeff(), sorted.col(1).maxCoeff());

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    emit_frame(svg, xr, yr, title, x_label, y_label);

    svg << "<polyline fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\" points=\"";
    for (Eigen::Index i = 0; i < sorted.rows(); ++i) {
        if (i > 0) svg << ' ';
        svg << xr.to_px(sorted(i, 0), kLeft, kRight) << ','
            << yr.to_px(sorted(i, 1), kBottom, kTop);
    }
    svg << "\"/>\n";
    for (Eigen::Index i = 0; i < sorted.rows(); ++i)
        svg << "<circle cx=\"" << xr.to_px(sorted(i, 0), kLeft, kRight) << "\" cy=\""
            << yr.to_px(sorted(i, 1), kBottom, kTop) << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace lfi::cli
