#include "lfi/infer/estimate.hpp"

#include "lfi/density/rejection.hpp"
#include "lfi/nn/scaler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <utility>

namespace lfi::infer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

SampleBatch reject_into_batch(const std::function<double(const Vec&)>& target,
                              const density::RejectionProposal& proposal, int n,
                              std::uint64_t seed, const density::RejectionConfig& cfg) {
    density::RejectionResult res = density::rejection_sample(target, proposal, n, seed, cfg);
    return SampleBatch{std::move(res.samples), res.acceptance_rate, res.log_envelope};
}

}  // namespace

PosteriorEstimate prior_estimate(const sim::PriorBox& prior) {
    PosteriorEstimate est;
    est.kind = "prior";
    est.round = 0;
    est.log_density = [prior](const Vec& theta) { return prior.log_density(theta); };
    est.sample_batch = [prior](int n, std::uint64_t seed) {
        require(n >= 1, "prior_estimate: sample count must be positive");
        Rng rng = make_rng(seed, stream::proposal);
        Mat out(n, prior.dim());
        for (int i = 0; i < n; ++i) out.row(i) = prior.sample(rng).transpose();
        return SampleBatch{std::move(out), 1.0, 0.0};
    };
    return est;
}

void ProposalMixture::add(std::function<double(const Vec&)> log_component) {
    require(static_cast<bool>(log_component), "ProposalMixture::add: empty component");
    log_components.push_back(std::move(log_component));
}

double ProposalMixture::log_sum_density(const Vec& theta) const {
    require(!log_components.empty(), "ProposalMixture: no components");
    std::vector<double> logs(log_components.size());
    for (std::size_t j = 0; j < log_components.size(); ++j) logs[j] = log_components[j](theta);
    return log_sum_exp(logs);
}

ProposalMixture prior_mixture(const sim::PriorBox& prior) {
    ProposalMixture mix;
    mix.add([prior](const Vec& theta) { return prior.log_density(theta); });
    return mix;
}

FitDensity fit_density(density::ParametricPosteriorFit fit) {
    auto shared = std::make_shared<const density::ParametricPosteriorFit>(std::move(fit));
    return FitDensity{[shared](const Vec& theta) { return shared->log_density(theta); },
                      [shared](Rng& rng) { return shared->sample(rng); }};
}

FitDensity widened_gaussian_fallback(const Mat& thetas, const sim::PriorBox& prior) {
    require(thetas.rows() >= 2, "widened_gaussian_fallback: need at least 2 rows");
    require(thetas.cols() == prior.dim(), "widened_gaussian_fallback: dimension mismatch");
    const int k = prior.dim();
    Vec mean = thetas.colwise().mean();
    Vec sd(k);
    for (int j = 0; j < k; ++j) {
        const double var = (thetas.col(j).array() - mean[j]).square().sum() /
                           static_cast<double>(thetas.rows() - 1);
        const double width = prior.bounds[j].second - prior.bounds[j].first;
        sd[j] = std::max(2.0 * std::sqrt(var), 0.05 * width);
    }
    return FitDensity{[mean, sd](const Vec& theta) {
                          double acc = 0.0;
                          for (int j = 0; j < mean.size(); ++j)
                              acc += norm_logpdf((theta[j] - mean[j]) / sd[j]) - std::log(sd[j]);
                          return acc;
                      },
                      [mean, sd](Rng& rng) {
                          std::normal_distribution<double> gauss(0.0, 1.0);
                          Vec theta(mean.size());
                          for (int j = 0; j < mean.size(); ++j)
                              theta[j] = mean[j] + sd[j] * gauss(rng);
                          return theta;
                      }};
}

PosteriorEstimate smc_reweight(FitDensity fit, const sim::PriorBox& prior,
                               ProposalMixture proposals, int round) {
    require(static_cast<bool>(fit.log_density) && static_cast<bool>(fit.draw),
            "smc_reweight: incomplete fit density");
    require(proposals.count() >= 1, "smc_reweight: proposal mixture is empty");
    auto mix = std::make_shared<const ProposalMixture>(std::move(proposals));
    auto fit_log_density = fit.log_density;
    auto target = [prior, mix, fit_log_density](const Vec& theta) {
        const double lp = prior.log_density(theta);
        if (!std::isfinite(lp)) return kNegInf;
        const double lmix = mix->log_sum_density(theta);
        require(std::isfinite(lmix),
                "smc_reweight: proposal mixture vanishes inside the prior box");
        return lp - lmix + fit_log_density(theta);
    };

    PosteriorEstimate est;
    est.kind = "smc-reweighted-fit";
    est.round = round;
    est.log_density = target;
    est.sample_batch = [target, fit](int n, std::uint64_t seed) {
        density::RejectionProposal proposal{fit.draw, fit.log_density};
        density::RejectionConfig cfg;
        // pi / sum_j p_j <= 1 because the prior is one of the components.
        cfg.log_envelope = 0.0;
        return reject_into_batch(target, proposal, n, seed, cfg);
    };
    return est;
}

PosteriorEstimate smc_reweight(const density::ParametricPosteriorFit& fit,
                               const sim::PriorBox& prior, ProposalMixture proposals, int round) {
    return smc_reweight(fit_density(fit), prior, std::move(proposals), round);
}

PosteriorEstimate snl_posterior(std::function<double(const Vec&)> log_conditional,
                                const sim::PriorBox& prior, int round) {
    require(static_cast<bool>(log_conditional), "snl_posterior: empty conditional");
    auto target = [prior, log_conditional](const Vec& theta) {
        const double lp = prior.log_density(theta);
        if (!std::isfinite(lp)) return kNegInf;
        return lp + log_conditional(theta);
    };

    PosteriorEstimate est;
    est.kind = "snl-bayes";
    est.round = round;
    est.log_density = target;
    est.sample_batch = [target, prior](int n, std::uint64_t seed) {
        density::RejectionProposal proposal{
            [prior](Rng& rng) { return prior.sample(rng); },
            [prior](const Vec& theta) { return prior.log_density(theta); }};
        return reject_into_batch(target, proposal, n, seed, density::RejectionConfig{});
    };
    return est;
}

std::vector<int> select_top_m(const Mat& stat_values, const Vec& stat_obs, int m) {
    const int n = static_cast<int>(stat_values.rows());
    require(m >= 1 && m <= n, "select_top_m: m out of range");
    require(stat_obs.size() == stat_values.cols(), "select_top_m: dimension mismatch");

    nn::StandardScaler scaler = nn::StandardScaler::fit(stat_values);
    Mat standardized = scaler.apply(stat_values);
    Vec obs_std = scaler.apply_row(stat_obs);
    Vec dist2 = (standardized.rowwise() - obs_std.transpose()).rowwise().squaredNorm();

    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
        return a < b;
    });
    idx.resize(static_cast<std::size_t>(m));
    return idx;
}

}  // namespace lfi::infer
