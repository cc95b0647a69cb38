#pragma once

// Gaussian mixtures fitted by EM with k-means++ initialization. Covariances
// are kept positive definite by flooring eigenvalues at a small jitter;
// whenever the floor actually fires the model is flagged, because a fired
// floor also voids the textbook monotonicity guarantee.

#include "lfi/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace lfi::density {

struct GmmModel {
    Vec weights;              // k, sums to 1
    std::vector<Vec> means;   // k entries, each dim
    std::vector<Mat> covs;    // k entries, each dim x dim

    int component_count() const { return static_cast<int>(weights.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

    double log_density(const Vec& x) const;
    Vec log_density_batch(const Mat& xs) const;
    // log N(x; mean_c, cov_c), without the weight factor
    double component_log_density(int c, const Vec& x) const;
    Vec sample(Rng& rng) const;

    // refreshed after fitting or deserialization
    void refresh_cache();

    bool jitter_applied = false;
    std::vector<double> ll_trace;  // per-EM-iteration mean log-likelihood

  private:
    std::vector<Mat> chol_;    // lower Cholesky factors
    Vec log_norm_;             // per-component log normalizer
};

struct GmmEmConfig {
    int max_iter = 500;
    double tol = 1e-8;          // stop when the ll gain drops below this
    double eigen_floor = 1e-9;  // covariance eigenvalue floor
};

GmmModel gmm_fit_em(const Mat& samples, int k, std::uint64_t seed,
                    const GmmEmConfig& cfg = {});

nlohmann::json gmm_to_json(const GmmModel& m);
GmmModel gmm_from_json(const nlohmann::json& j);

}  // namespace lfi::density
