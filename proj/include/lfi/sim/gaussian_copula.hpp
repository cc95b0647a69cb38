#pragma once

// Bivariate Gaussian-copula population model. Latents (z1, z2) are standard
// normal with correlation theta3; marginals are Beta(theta1, 2) and the
// two-component normal mixture theta2*N(1,1) + (1-theta2)*N(4, 1/4). One
// dataset is a population of `population_size` pairs, summarized for
// inference as 20 interpolated quantiles per marginal plus a rank-based
// latent correlation estimate (41 dims).

#include "lfi/common.hpp"

#include <cstdint>

namespace lfi::sim {

inline constexpr int gc_population_size = 200;
inline constexpr int gc_raw_stat_dim = 41;

// Beta(a, 2) has closed forms: F(x) = x^a (a + 1 - a x).
double beta2_cdf(double x, double a);
double beta2_pdf(double x, double a);
double beta2_quantile(double u, double a);

// Mixture w*N(1,1) + (1-w)*N(4, 0.25).
double gmix_cdf(double x, double w);
double gmix_pdf(double x, double w);
double gmix_quantile(double u, double w);

Mat gc_sample_population(const Vec& theta, int n, Rng& rng);  // n x 2

// Sorted-sample quantile with linear interpolation between order statistics.
double empirical_quantile(const std::vector<double>& sorted, double level);

// Van der Waerden normal scores: z_i = Phi^{-1}(rank_i / (n+1)), average
// ranks on ties; returns the Pearson correlation of the scored columns.
double rank_latent_correlation(const Mat& population);

Vec gc_raw_statistic(const Mat& population);

// Expert view: 5 quantiles per marginal at levels k/6 (interpolated from the
// 20 stored quantile knots) plus the stored correlation -> 11 dims.
Vec gc_expert_statistic_from_raw(const Vec& raw);

// Exact log p(population | theta); requires x1 in (0,1) and |theta3| < 1.
double gc_log_likelihood(const Mat& population, const Vec& theta);

}  // namespace lfi::sim
