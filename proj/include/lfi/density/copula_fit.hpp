#pragma once

// Gaussian-copula fit over parameter samples: smoothed piecewise-linear
// empirical marginal CDFs (tail knots extend slightly past the data range)
// tied together by the correlation matrix of rank-Gaussianized samples.
// This is the parametric posterior family used by the SMC rounds; it is
// cheap, normalized by construction, and handles skewed marginals.

#include "lfi/common.hpp"

#include <json.hpp>

#include <vector>

namespace lfi::density {

struct MarginalCdf {
    Vec xs;  // strictly increasing knot locations
    Vec ps;  // CDF values at the knots: 0 at the front, 1 at the back

    double lo() const { return xs[0]; }
    double hi() const { return xs[xs.size() - 1]; }
    double cdf(double x) const;
    double log_pdf(double x) const;  // log segment slope; -inf outside [lo, hi]
    double quantile(double p) const;
};

// Piecewise-linear CDF through empirical quantiles with `segments` pieces.
// Throws NumericalError when the column has fewer than two distinct values.
MarginalCdf fit_marginal_cdf(const Vec& column, int segments);

struct ParametricPosteriorFit {
    std::vector<MarginalCdf> marginals;
    Mat corr;      // correlation actually used (possibly shrunk)
    Mat raw_corr;  // rank-Gaussianized correlation before any shrink
    Mat chol;      // lower Cholesky factor of corr
    // CDF values are clamped into the rank range seen at fit time before
    // Gaussianization; without this the copula factor diverges at the
    // support corners and the density is not numerically integrable.
    double u_clamp = 1e-3;
    bool shrink_applied = false;

    int dim() const { return static_cast<int>(marginals.size()); }
    double log_density(const Vec& theta) const;
    Vec sample(Rng& rng) const;
};

ParametricPosteriorFit fit_parametric_posterior(const Mat& samples);

nlohmann::json copula_to_json(const ParametricPosteriorFit& fit);
ParametricPosteriorFit copula_from_json(const nlohmann::json& j);

}  // namespace lfi::density
