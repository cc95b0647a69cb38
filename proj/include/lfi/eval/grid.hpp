#pragma once

// Grid-based posterior comparison. Posteriors are compared by the
// Jensen-Shannon divergence between the two densities renormalized over a
// shared rectangular grid, evaluated as a Riemann sum.

#include "lfi/common.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace lfi::eval {

using LogDensityFn = std::function<double(const Vec&)>;

// Equally spaced inclusive grid, one axis per parameter dimension.
struct GridSpec {
    std::vector<Vec> axes;

    // Bounds are the per-dimension min/max of the samples, no padding.
    static GridSpec from_samples(const Mat& samples, int points_per_dim = 30);
    static GridSpec from_bounds(const std::vector<std::pair<double, double>>& bounds,
                                int points_per_dim);

    int dim() const { return static_cast<int>(axes.size()); }
    Eigen::Index total() const;
    double cell_volume() const;  // product of axis steps
    Vec point(Eigen::Index flat) const;
    std::pair<double, double> bounds(int k) const;
};

// Log density at every grid point, in flat-index order.
Vec eval_on_grid(const LogDensityFn& log_density, const GridSpec& grid);

struct GridJsdResult {
    double value = 0.0;
    // Riemann mass of each input before renormalization; meaningful when the
    // input is a normalized density, in which case < 0.5 means its support
    // escapes the grid.
    double p_grid_mass = 0.0;
    double q_grid_mass = 0.0;
    bool mass_warning = false;
};

// JSD between the renormalized grid restrictions of p and q. 0*log(0/.)
// terms are 0; the value lies in [0, ln 2] up to rounding.
GridJsdResult grid_jsd_values(const Vec& log_p, const Vec& log_q, const GridSpec& grid);
GridJsdResult grid_jsd(const LogDensityFn& p, const LogDensityFn& q, const GridSpec& grid);

}  // namespace lfi::eval
