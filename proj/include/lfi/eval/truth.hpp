#pragma once

// Ground-truth posteriors for the benchmarks. Models with an exact
// likelihood (OU, copula, toy) get the analytic log posterior evaluated on
// the grid; the Ising model gets a rejection-ABC reference built from a
// large cached table of prior simulations, smoothed by an 8-component GMM.

#include "lfi/common.hpp"
#include "lfi/eval/grid.hpp"
#include "lfi/sim/model_spec.hpp"

#include <optional>
#include <string>

namespace lfi::eval {

struct TruthPosterior {
    GridSpec grid;          // bounds from 500 reference posterior samples
    Vec grid_log_density;   // unnormalized truth log density at grid points
    Mat reference_samples;  // the samples that set the grid bounds
};

// Unnormalized log posterior: prior plus oracle likelihood, -inf outside
// the prior box. Captures spec by reference; obs.raw by value.
LogDensityFn truth_log_posterior(const sim::ModelSpec& spec, const sim::Observation& obs);

// Exact log posterior (prior + oracle likelihood) on a 30^K grid whose
// bounds come from 500 posterior samples drawn off a fine discretization of
// the prior box.
TruthPosterior analytic_truth_posterior(const sim::ModelSpec& spec,
                                        const sim::Observation& obs, std::uint64_t seed,
                                        int points_per_dim = 30);

// Table of (theta, s*) pairs from prior simulations of the Ising model,
// reused across observations; building it is the expensive step, so it is
// cached on disk.
struct IsingAbcTable {
    Vec theta;
    Vec sstar;

    static IsingAbcTable build(const sim::ModelSpec& spec, int n_sims, std::uint64_t seed);
    // Loads the cache when the header matches (n_sims, seed); otherwise
    // builds and atomically rewrites it.
    static IsingAbcTable load_or_build(const std::string& cache_path,
                                       const sim::ModelSpec& spec, int n_sims,
                                       std::uint64_t seed);

    void save(const std::string& path, std::uint64_t seed) const;
    static std::optional<IsingAbcTable> try_load(const std::string& path, int n_sims,
                                                 std::uint64_t seed);
};

// Rejection-ABC posterior: keep the 5% of table entries closest to the
// observed s*, require at least 50000 of them, smooth with a GMM.
TruthPosterior ising_truth_posterior(const sim::ModelSpec& spec, const sim::Observation& obs,
                                     const IsingAbcTable& table, std::uint64_t seed,
                                     int points_per_dim = 30);

inline constexpr int ising_abc_table_size = 1000000;
inline constexpr std::uint64_t ising_abc_table_seed = 424242;

// Dispatcher: analytic when the model has a likelihood oracle, the cached
// ABC reference for the Ising model.
TruthPosterior truth_posterior(const sim::ModelSpec& spec, const sim::Observation& obs,
                               const std::string& cache_dir, std::uint64_t seed,
                               int points_per_dim = 30);

}  // namespace lfi::eval
