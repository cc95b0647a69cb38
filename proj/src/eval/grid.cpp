#include "lfi/eval/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfi::eval {

GridSpec GridSpec::from_samples(const Mat& samples, int points_per_dim) {
    require(samples.rows() >= 2, "GridSpec: need at least two samples");
    require(samples.allFinite(), "GridSpec: samples must be finite");
    std::vector<std::pair<double, double>> bounds;
    for (Eigen::Index k = 0; k < samples.cols(); ++k)
        bounds.emplace_back(samples.col(k).minCoeff(), samples.col(k).maxCoeff());
    return from_bounds(bounds, points_per_dim);
}

GridSpec GridSpec::from_bounds(const std::vector<std::pair<double, double>>& bounds,
                               int points_per_dim) {
    require(!bounds.empty(), "GridSpec: need at least one dimension");
    require(points_per_dim >= 2, "GridSpec: need at least two points per dimension");
    GridSpec grid;
    for (const auto& [lo, hi] : bounds) {
        require(std::isfinite(lo) && std::isfinite(hi), "GridSpec: bounds must be finite");
        if (!(hi > lo)) throw NumericalError("GridSpec: degenerate bounds in some dimension");
        Vec axis(points_per_dim);
        const double step = (hi - lo) / (points_per_dim - 1);
        for (int i = 0; i < points_per_dim; ++i) axis[i] = lo + step * i;
        grid.axes.push_back(std::move(axis));
    }
    return grid;
}

Eigen::Index GridSpec::total() const {
    Eigen::Index n = 1;
    for (const auto& axis : axes) n *= axis.size();
    return n;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (const auto& axis : axes) v *= axis[1] - axis[0];
    return v;
}

Vec GridSpec::point(Eigen::Index flat) const {
    require(flat >= 0 && flat < total(), "GridSpec::point: index out of range");
    Vec p(dim());
    // last axis varies fastest
    for (int k = dim() - 1; k >= 0; --k) {
        const Eigen::Index n = axes[static_cast<std::size_t>(k)].size();
        p[k] = axes[static_cast<std::size_t>(k)][flat % n];
        flat /= n;
    }
    return p;
}

std::pair<double, double> GridSpec::bounds(int k) const {
    require(k >= 0 && k < dim(), "GridSpec::bounds: dimension out of range");
    const auto& axis = axes[static_cast<std::size_t>(k)];
    return {axis[0], axis[axis.size() - 1]};
}

Vec eval_on_grid(const LogDensityFn& log_density, const GridSpec& grid) {
    const Eigen::Index n = grid.total();
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = log_density(grid.point(i));
    return out;
}

namespace {

// exp(log_w - lse), with the normalizer reported; -inf entries become 0.
Vec normalize_log_weights(const Vec& log_w, double& lse) {
    std::vector<double> v(log_w.data(), log_w.data() + log_w.size());
    lse = log_sum_exp(v);
    if (!std::isfinite(lse)) throw NumericalError("grid_jsd: density vanishes on the grid");
    Vec p(log_w.size());
    for (Eigen::Index i = 0; i < log_w.size(); ++i)
        p[i] = std::isfinite(log_w[i]) ? std::exp(log_w[i] - lse) : 0.0;
    return p;
}

}  // namespace

GridJsdResult grid_jsd_values(const Vec& log_p, const Vec& log_q, const GridSpec& grid) {
    require(log_p.size() == grid.total() && log_q.size() == grid.total(),
            "grid_jsd: value count does not match the grid");
    double lsp = 0.0, lsq = 0.0;
    const Vec p = normalize_log_weights(log_p, lsp);
    const Vec q = normalize_log_weights(log_q, lsq);

    double acc_p = 0.0, acc_q = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc_p += p[i] * (std::log(p[i]) - std::log(m));
        if (q[i] > 0.0) acc_q += q[i] * (std::log(q[i]) - std::log(m));
    }

    GridJsdResult r;
    r.value = std::max(0.0, 0.5 * acc_p + 0.5 * acc_q);
    r.p_grid_mass = std::exp(lsp) * grid.cell_volume();
    r.q_grid_mass = std::exp(lsq) * grid.cell_volume();
    r.mass_warning = r.p_grid_mass < 0.5 || r.q_grid_mass < 0.5;
    return r;
}

GridJsdResult grid_jsd(const LogDensityFn& p, const LogDensityFn& q, const GridSpec& grid) {
    return grid_jsd_values(eval_on_grid(p, grid), eval_on_grid(q, grid), grid);
}

}  // namespace lfi::eval
