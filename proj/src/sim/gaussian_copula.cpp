#include "lfi/sim/gaussian_copula.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace lfi::sim {

double beta2_cdf(double x, double a) {
    require(a > 0.0, "beta2_cdf: shape must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return std::pow(x, a) * (a + 1.0 - a * x);
}

double beta2_pdf(double x, double a) {
    require(a > 0.0, "beta2_pdf: shape must be positive");
    if (x < 0.0 || x > 1.0) return 0.0;
    // pow handles the x = 0 endpoint limits (0 for a > 1, 2 for a = 1,
    // +inf for a < 1)
    return a * (a + 1.0) * std::pow(x, a - 1.0) * (1.0 - x);
}

double gmix_cdf(double x, double w) {
    return w * norm_cdf(x - 1.0) + (1.0 - w) * norm_cdf((x - 4.0) / 0.5);
}

double gmix_pdf(double x, double w) {
    return w * norm_pdf(x - 1.0) + (1.0 - w) * 2.0 * norm_pdf((x - 4.0) / 0.5);
}

namespace {

// Bisection to ~1e-12 bracket width, then Newton polish. The CDFs here are
// monotone and cheap, so fixed iteration counts are simplest.
template <typename Cdf, typename Pdf>
double invert_cdf(double u, Cdf cdf, Pdf pdf, double lo, double hi) {
    require(u > 0.0 && u < 1.0, "invert_cdf: u must lie in (0,1)");
    for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < u)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double d = pdf(x);
        if (d <= 0.0) break;
        const double step = (cdf(x) - u) / d;
        const double next = x - step;
        if (next <= lo || next >= hi) break;
        x = next;
    }
    return x;
}

}  // namespace

double beta2_quantile(double u, double a) {
    return invert_cdf(
        u, [a](double x) { return beta2_cdf(x, a); }, [a](double x) { return beta2_pdf(x, a); },
        0.0, 1.0);
}

double gmix_quantile(double u, double w) {
    // both mixture components live well inside [-8, 10]
    return invert_cdf(
        u, [w](double x) { return gmix_cdf(x, w); }, [w](double x) { return gmix_pdf(x, w); },
        -8.0, 10.0);
}

Mat gc_sample_population(const Vec& theta, int n, Rng& rng) {
    require(theta.size() == 3, "gc_sample_population: theta must have 3 coordinates");
    const double a = theta[0], w = theta[1], rho = theta[2];
    require(a > 0.0, "gc_sample_population: theta1 must be positive");
    require(w >= 0.0 && w <= 1.0, "gc_sample_population: theta2 must lie in [0,1]");
    require(std::abs(rho) < 1.0, "gc_sample_population: |theta3| must be < 1");

    std::normal_distribution<double> gauss(0.0, 1.0);
    const double s = std::sqrt(1.0 - rho * rho);
    Mat pop(n, 2);
    for (int i = 0; i < n; ++i) {
        const double g1 = gauss(rng);
        const double g2 = gauss(rng);
        const double z1 = g1;
        const double z2 = rho * g1 + s * g2;
        pop(i, 0) = beta2_quantile(std::clamp(norm_cdf(z1), 1e-15, 1.0 - 1e-15), a);
        pop(i, 1) = gmix_quantile(std::clamp(norm_cdf(z2), 1e-15, 1.0 - 1e-15), w);
    }
    return pop;
}

double empirical_quantile(const std::vector<double>& sorted, double level) {
    require(!sorted.empty(), "empirical_quantile: empty sample");
    require(level >= 0.0 && level <= 1.0, "empirical_quantile: level outside [0,1]");
    const double h = level * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    require(saa > 0.0 && sbb > 0.0, "pearson: zero-variance input");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

double rank_latent_correlation(const Mat& population) {
    require(population.cols() == 2 && population.rows() >= 3,
            "rank_latent_correlation: need an n x 2 population, n >= 3");
    const auto n = static_cast<std::size_t>(population.rows());
    std::vector<double> c1(n), c2(n);
    for (std::size_t i = 0; i < n; ++i) {
        c1[i] = population(static_cast<Eigen::Index>(i), 0);
        c2[i] = population(static_cast<Eigen::Index>(i), 1);
    }
    auto score = [&](std::vector<double> col) {
        auto ranks = average_ranks(col);
        std::vector<double> z(ranks.size());
        for (std::size_t i = 0; i < ranks.size(); ++i)
            z[i] = norm_quantile(ranks[i] / (static_cast<double>(ranks.size()) + 1.0));
        return z;
    };
    return pearson(score(c1), score(c2));
}

Vec gc_raw_statistic(const Mat& population) {
    require(population.cols() == 2 && population.rows() >= 4,
            "gc_raw_statistic: need an n x 2 population");
    Vec stat(gc_raw_stat_dim);
    const auto n = static_cast<std::size_t>(population.rows());
    for (int col = 0; col < 2; ++col) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = population(static_cast<Eigen::Index>(i), col);
        std::sort(v.begin(), v.end());
        for (int k = 1; k <= 20; ++k)
            stat[col * 20 + (k - 1)] = empirical_quantile(v, static_cast<double>(k) / 21.0);
    }
    stat[40] = rank_latent_correlation(population);
    return stat;
}

Vec gc_expert_statistic_from_raw(const Vec& raw) {
    require(raw.size() == gc_raw_stat_dim, "gc_expert_statistic_from_raw: wrong input size");
    Vec out(11);
    // stored quantile knots sit at levels k/21, k = 1..20; interpolate the
    // piecewise-linear quantile curve at the expert levels k/6
    for (int col = 0; col < 2; ++col) {
        for (int k = 1; k <= 5; ++k) {
            const double level = static_cast<double>(k) / 6.0;
            const double pos = level * 21.0;  // knot j sits at pos j (level j/21)
            const int lo = std::clamp(static_cast<int>(pos), 1, 19);
            const double frac = pos - lo;
            const double qlo = raw[col * 20 + (lo - 1)];
            const double qnext = raw[col * 20 + lo];
            out[col * 5 + (k - 1)] = qlo + frac * (qnext - qlo);
        }
    }
    out[10] = raw[40];
    return out;
}

double gc_log_likelihood(const Mat& population, const Vec& theta) {
    require(population.cols() == 2, "gc_log_likelihood: population must be n x 2");
    require(theta.size() == 3, "gc_log_likelihood: theta must have 3 coordinates");
    const double a = theta[0], w = theta[1], rho = theta[2];
    require(a > 0.0, "gc_log_likelihood: theta1 must be positive");
    require(w >= 0.0 && w <= 1.0, "gc_log_likelihood: theta2 must lie in [0,1]");
    require(std::abs(rho) < 1.0, "gc_log_likelihood: |theta3| must be < 1");

    const double r2 = rho * rho;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < population.rows(); ++i) {
        const double x1 = population(i, 0);
        const double x2 = population(i, 1);
        if (!(x1 > 0.0 && x1 < 1.0))
            throw NumericalError("gc_log_likelihood: x1 outside (0,1) at row " + std::to_string(i));
        const double f1 = beta2_pdf(x1, a);
        const double f2 = gmix_pdf(x2, w);
        if (f1 <= 0.0 || f2 <= 0.0)
            throw NumericalError("gc_log_likelihood: zero marginal density at row " +
                                 std::to_string(i));
        const double u1 = std::clamp(beta2_cdf(x1, a), 1e-15, 1.0 - 1e-15);
        const double u2 = std::clamp(gmix_cdf(x2, w), 1e-15, 1.0 - 1e-15);
        const double z1 = norm_quantile(u1);
        const double z2 = norm_quantile(u2);
        const double log_cop =
            -0.5 * std::log(1.0 - r2) -
            (r2 * (z1 * z1 + z2 * z2) - 2.0 * rho * z1 * z2) / (2.0 * (1.0 - r2));
        ll += std::log(f1) + std::log(f2) + log_cop;
    }
    return ll;
}

}  // namespace lfi::sim
