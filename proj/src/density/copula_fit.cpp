#include "lfi/density/copula_fit.hpp"

#include "lfi/nn/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace lfi::density {

namespace {

double quantile_type7(const std::vector<double>& sorted, double level) {
    const auto n = sorted.size();
    const double h = level * (static_cast<double>(n) - 1.0);
    const auto lo = static_cast<std::size_t>(std::clamp<double>(std::floor(h), 0.0,
                                                               static_cast<double>(n - 1)));
    const auto hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Vec average_ranks(const Vec& v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    Vec ranks(v.size());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vec& a, const Vec& b) {
    const Vec ca = a.array() - a.mean();
    const Vec cb = b.array() - b.mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    require(denom > 0.0, "pearson: zero variance");
    return ca.dot(cb) / denom;
}

}  // namespace

double MarginalCdf::cdf(double x) const {
    if (x <= lo()) return 0.0;
    if (x >= hi()) return 1.0;
    const double* begin = xs.data();
    const double* end = xs.data() + xs.size();
    const auto it = std::upper_bound(begin, end, x);
    const auto k = static_cast<Eigen::Index>(it - begin) - 1;
    const double frac = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return ps[k] + frac * (ps[k + 1] - ps[k]);
}

double MarginalCdf::log_pdf(double x) const {
    if (x < lo() || x > hi()) return -std::numeric_limits<double>::infinity();
    const double* begin = xs.data();
    const double* end = xs.data() + xs.size();
    auto k = static_cast<Eigen::Index>(std::upper_bound(begin, end, x) - begin) - 1;
    if (k < 0) k = 0;
    if (k >= xs.size() - 1) k = xs.size() - 2;
    return std::log((ps[k + 1] - ps[k]) / (xs[k + 1] - xs[k]));
}

double MarginalCdf::quantile(double p) const {
    if (p <= 0.0) return lo();
    if (p >= 1.0) return hi();
    const double* begin = ps.data();
    const double* end = ps.data() + ps.size();
    auto k = static_cast<Eigen::Index>(std::upper_bound(begin, end, p) - begin) - 1;
    if (k < 0) k = 0;
    if (k >= ps.size() - 1) k = ps.size() - 2;
    const double frac = (p - ps[k]) / (ps[k + 1] - ps[k]);
    return xs[k] + frac * (xs[k + 1] - xs[k]);
}

MarginalCdf fit_marginal_cdf(const Vec& column, int segments) {
    require(column.size() >= 4, "fit_marginal_cdf: need at least 4 samples");
    require(segments >= 2, "fit_marginal_cdf: need at least 2 segments");
    std::vector<double> sorted(column.data(), column.data() + column.size());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw NumericalError("fit_marginal_cdf: column is constant");

    const double pad = (sorted.back() - sorted.front()) / segments;
    std::vector<double> kx{sorted.front() - pad};
    std::vector<double> kp{0.0};
    for (int j = 1; j < segments; ++j) {
        const double x = quantile_type7(sorted, static_cast<double>(j) / segments);
        const double p = static_cast<double>(j) / segments;
        if (x > kx.back()) {
            kx.push_back(x);
            kp.push_back(p);
        } else {
            kp.back() = p;  // tied quantiles collapse into one knot
        }
    }
    kx.push_back(sorted.back() + pad);
    kp.push_back(1.0);

    MarginalCdf m;
    m.xs = Eigen::Map<const Vec>(kx.data(), static_cast<Eigen::Index>(kx.size()));
    m.ps = Eigen::Map<const Vec>(kp.data(), static_cast<Eigen::Index>(kp.size()));
    return m;
}

double ParametricPosteriorFit::log_density(const Vec& theta) const {
    require(theta.size() == dim(), "copula fit: dimension mismatch");
    double log_marg = 0.0;
    Vec z(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double lp = marginals[static_cast<std::size_t>(i)].log_pdf(theta[i]);
        if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
        log_marg += lp;
        const double u = std::clamp(marginals[static_cast<std::size_t>(i)].cdf(theta[i]),
                                    u_clamp, 1.0 - u_clamp);
        z[i] = norm_quantile(u);
    }
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < chol.rows(); ++i) log_det_half += std::log(chol(i, i));
    const Vec w = chol.triangularView<Eigen::Lower>().solve(z);
    const double log_copula = -log_det_half - 0.5 * (w.squaredNorm() - z.squaredNorm());
    return log_marg + log_copula;
}

Vec ParametricPosteriorFit::sample(Rng& rng) const {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec g(dim());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = n(rng);
    const Vec z = chol * g;
    Vec theta(dim());
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        theta[i] = marginals[static_cast<std::size_t>(i)].quantile(norm_cdf(z[i]));
    return theta;
}

ParametricPosteriorFit fit_parametric_posterior(const Mat& samples) {
    const int n = static_cast<int>(samples.rows());
    const int k = static_cast<int>(samples.cols());
    require(n >= 20, "fit_parametric_posterior: need at least 20 samples");
    require(k >= 1, "fit_parametric_posterior: need at least one coordinate");

    ParametricPosteriorFit fit;
    fit.u_clamp = 1.0 / (n + 1.0);
    const int segments = std::clamp(n / 10, 5, 20);
    for (int j = 0; j < k; ++j) fit.marginals.push_back(fit_marginal_cdf(samples.col(j), segments));

    Mat z(n, k);
    for (int j = 0; j < k; ++j) {
        const Vec ranks = average_ranks(samples.col(j));
        for (int i = 0; i < n; ++i) z(i, j) = norm_quantile(ranks[i] / (n + 1.0));
    }
    Mat r = Mat::Identity(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) r(a, b) = r(b, a) = pearson(z.col(a), z.col(b));
    fit.raw_corr = r;

    // shrink toward identity until the factorization succeeds
    double lambda = 0.05;
    Mat used = r;
    while (true) {
        const Eigen::MatrixXd dense = used;
        Eigen::LLT<Eigen::MatrixXd> llt(dense);
        if (llt.info() == Eigen::Success) {
            fit.corr = used;
            fit.chol = Mat(llt.matrixL());
            break;
        }
        require(lambda <= 1.0, "fit_parametric_posterior: correlation matrix unusable");
        used = (1.0 - lambda) * r + lambda * Mat::Identity(k, k);
        fit.shrink_applied = true;
        lambda *= 2.0;
    }
    return fit;
}

nlohmann::json copula_to_json(const ParametricPosteriorFit& fit) {
    nlohmann::json marginals = nlohmann::json::array();
    for (const MarginalCdf& m : fit.marginals)
        marginals.push_back({{"xs", nn::vec_to_json(m.xs)}, {"ps", nn::vec_to_json(m.ps)}});
    return {{"kind", "parametric-posterior-fit"},
            {"format", nn::checkpoint_format_version},
            {"marginals", marginals},
            {"corr", nn::mat_to_json(fit.corr)},
            {"raw_corr", nn::mat_to_json(fit.raw_corr)},
            {"chol", nn::mat_to_json(fit.chol)},
            {"u_clamp", fit.u_clamp},
            {"shrink_applied", fit.shrink_applied}};
}

ParametricPosteriorFit copula_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "parametric-posterior-fit")
        throw ConfigError("copula_from_json: wrong kind");
    ParametricPosteriorFit fit;
    for (const auto& m : j.at("marginals"))
        fit.marginals.push_back(
            MarginalCdf{nn::vec_from_json(m.at("xs")), nn::vec_from_json(m.at("ps"))});
    fit.corr = nn::mat_from_json(j.at("corr"));
    fit.raw_corr = nn::mat_from_json(j.at("raw_corr"));
    fit.chol = nn::mat_from_json(j.at("chol"));
    fit.u_clamp = j.at("u_clamp").get<double>();
    fit.shrink_applied = j.at("shrink_applied").get<bool>();
    require(fit.dim() >= 1, "copula_from_json: empty fit");
    require(fit.corr.rows() == fit.dim() && fit.corr.cols() == fit.dim(),
            "copula_from_json: corr dimension mismatch");
    return fit;
}

}  // namespace lfi::density
