#pragma once

// Posterior estimates and proposal bookkeeping for the sequential rounds.
// An estimate couples an unnormalized log density with a seeded rejection
// sampler; the mixture keeps the normalized densities of every proposal used
// so far, which is what the SMC reweighting divides by.

#include "lfi/common.hpp"
#include "lfi/density/copula_fit.hpp"
#include "lfi/sim/model_spec.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lfi::infer {

struct SampleBatch {
    Mat thetas;
    double acceptance_rate = 1.0;
    double log_envelope = 0.0;  // log M used by the rejection sampler

    // The rejection identity: acceptance = Z_f / M when the proposal is a
    // normalized density, so rate * exp(log M) estimates the target's
    // normalizing constant.
    double log_normalizer() const { return std::log(acceptance_rate) + log_envelope; }
};

struct PosteriorEstimate {
    std::string kind;  // "prior" | "smc-reweighted-fit" | "snl-bayes"
    int round = 0;
    std::function<double(const Vec&)> log_density;  // unnormalized; -inf outside the prior box
    std::function<SampleBatch(int n, std::uint64_t seed)> sample_batch;

    Mat sample(int n, std::uint64_t seed) const { return sample_batch(n, seed).thetas; }
};

// The prior wrapped as a round-0 estimate, so every round samples its
// parameters the same way.
PosteriorEstimate prior_estimate(const sim::PriorBox& prior);

// Normalized log densities of the proposals used so far, prior first.
struct ProposalMixture {
    std::vector<std::function<double(const Vec&)>> log_components;

    int count() const { return static_cast<int>(log_components.size()); }
    void add(std::function<double(const Vec&)> log_component);
    // log sum_j p_j(theta); the plain density sum, not an average.
    double log_sum_density(const Vec& theta) const;
};

ProposalMixture prior_mixture(const sim::PriorBox& prior);

// A fitted density reduced to the two closures the reweighting needs. The
// widened-Gaussian fallback for degenerate top-m sets plugs in here too.
struct FitDensity {
    std::function<double(const Vec&)> log_density;
    std::function<Vec(Rng&)> draw;
};

FitDensity fit_density(density::ParametricPosteriorFit fit);
// Diagonal Gaussian at the sample mean with inflated scales: per coordinate
// twice the sample sd, floored at 5% of the prior width.
FitDensity widened_gaussian_fallback(const Mat& thetas, const sim::PriorBox& prior);

// Importance reweighting of a fitted posterior approximation:
//   q(theta) proportional to pi(theta) / sum_j p_j(theta) * fit(theta).
// The mixture is snapshotted by value, so later rounds cannot retroactively
// change an estimate. Sampling rejects against the fit itself; because the
// prior is a mixture component, pi / sum_j p_j <= 1 and log M = 0 is exact.
PosteriorEstimate smc_reweight(FitDensity fit, const sim::PriorBox& prior,
                               ProposalMixture proposals, int round);
PosteriorEstimate smc_reweight(const density::ParametricPosteriorFit& fit,
                               const sim::PriorBox& prior, ProposalMixture proposals, int round);

// Synthetic-likelihood posterior q(theta) proportional to
// pi(theta) * exp(log_conditional(theta)), sampled by rejection from the
// prior box with a probe-estimated envelope. log_conditional is the learned
// conditional density evaluated at the observed statistic.
PosteriorEstimate snl_posterior(std::function<double(const Vec&)> log_conditional,
                                const sim::PriorBox& prior, int round);

// Indices of the m rows of stat_values closest to stat_obs in Euclidean
// distance after per-column standardization over stat_values. Ties break by
// row index so the selection is deterministic.
std::vector<int> select_top_m(const Mat& stat_values, const Vec& stat_obs, int m);

}  // namespace lfi::infer
