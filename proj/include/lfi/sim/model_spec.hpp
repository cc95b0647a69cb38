#pragma once

// Benchmark model registry. A ModelSpec bundles everything the inference
// loops and evaluators need: a box prior, a seeded simulator producing the
// data vector fed to inference, an expert statistic, and (where the model
// admits one) an exact log-likelihood for ground-truth posteriors.

#include "lfi/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lfi::sim {

struct PriorBox {
    std::vector<std::pair<double, double>> bounds;  // [low, high) per coordinate

    int dim() const { return static_cast<int>(bounds.size()); }

    bool contains(const Vec& theta) const {
        require(theta.size() == dim(), "PriorBox::contains: dimension mismatch");
        for (int k = 0; k < dim(); ++k)
            if (theta[k] < bounds[k].first || theta[k] > bounds[k].second) return false;
        return true;
    }

    double log_volume() const {
        double lv = 0.0;
        for (const auto& [lo, hi] : bounds) {
            require(hi > lo, "PriorBox: empty interval");
            lv += std::log(hi - lo);
        }
        return lv;
    }

    double log_density(const Vec& theta) const {
        return contains(theta) ? -log_volume() : -std::numeric_limits<double>::infinity();
    }

    Vec sample(Rng& rng) const {
        Vec theta(dim());
        for (int k = 0; k < dim(); ++k) {
            std::uniform_real_distribution<double> u(bounds[k].first, bounds[k].second);
            theta[k] = u(rng);
        }
        return theta;
    }

    double width(int k) const { return bounds[k].second - bounds[k].first; }
};

// The observed dataset: `x` is the vector inference sees; `raw` keeps the
// underlying population/path when the two differ (copula population), since
// exact likelihood oracles need the original sample.
struct Observation {
    Vec x;
    Mat raw;
    std::uint64_t seed = 0;
};

struct ModelSpec {
    std::string name;
    int param_dim = 0;
    int data_dim = 0;
    PriorBox prior;
    Vec true_theta;

    // Deterministic given the seed; inference derives one seed per draw.
    std::function<Vec(const Vec& theta, std::uint64_t seed)> simulate;
    std::function<Observation(const Vec& theta, std::uint64_t seed)> observe;

    std::function<Vec(const Vec& x)> expert_statistic;
    int expert_dim = 0;

    // Exact log p(raw | theta) where available (copula, OU, toy); empty for
    // models with intractable likelihood (Ising).
    std::function<double(const Mat& raw, const Vec& theta)> oracle_log_likelihood;

    // Known scalar sufficient statistic where one exists (Ising pair sum),
    // used by the sufficiency diagnostics and the Ising ground-truth sampler.
    std::function<double(const Vec& x)> known_sufficient_statistic;

    bool has_oracle() const { return static_cast<bool>(oracle_log_likelihood); }
};

ModelSpec make_ising_spec();
ModelSpec make_gaussian_copula_spec();
ModelSpec make_ou_spec();

// Small analytic toy: theta ~ U(-3,3) scalar, x = data_dim iid N(theta, 1).
// The sample mean is exactly sufficient, which makes it the reference case
// for the sufficiency diagnostics and for end-to-end smoke runs.
ModelSpec make_linear_gaussian_spec(int data_dim = 10);

ModelSpec make_model_spec(const std::string& name);

}  // namespace lfi::sim
