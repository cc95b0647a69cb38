#pragma once

// Posterior-quality metrics: sample-based density approximation for the
// grid JSD, the statistic-vs-sufficient-statistic monotonicity probe, and
// aggregation of per-round results into the benchmark tables.

#include "lfi/common.hpp"
#include "lfi/density/gmm.hpp"
#include "lfi/eval/grid.hpp"
#include "lfi/eval/truth.hpp"
#include "lfi/sim/model_spec.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lfi::eval {

// 8-component GMM over posterior samples; the grid JSD renormalizes it on
// the evaluation grid.
density::GmmModel approx_density_from_samples(const Mat& samples, std::uint64_t seed);

// Fit-and-compare convenience used once per round: GMM over the posterior
// samples, JSD against the truth on the truth's grid.
double posterior_sample_jsd(const Mat& posterior_samples, const TruthPosterior& truth,
                            std::uint64_t seed, GridJsdResult* detail = nullptr);

// Spearman rank correlation (average ranks on ties).
double spearman_rho(const Vec& a, const Vec& b);

struct SufficiencyProbe {
    double spearman = 0.0;
    bool first_coord_only = false;  // statistic had more than one coordinate
    Mat scatter;                    // n x 2: (s_star, s_learned)
};

// Rank correlation between a learned statistic and the model's known scalar
// sufficient statistic over prior-predictive draws.
SufficiencyProbe sufficiency_monotonicity(const std::function<Vec(const Vec&)>& statistic,
                                          const sim::ModelSpec& spec, int n_probe,
                                          std::uint64_t seed);

std::string scatter_csv(const Mat& scatter);

// --- run aggregation ------------------------------------------------------

struct RunRecord {
    std::string model;
    std::string method;
    std::uint64_t run_seed = 0;
    int round = 0;
    long long sims_cumulative = 0;
    double jsd = 0.0;
    double wall_time_s = 0.0;
};

struct CellSummary {
    std::string model;
    std::string method;
    int round = 0;
    long long sims_cumulative = 0;
    double mean_jsd = 0.0;
    double se_jsd = 0.0;  // sample sd / sqrt(n); 0 for a single run
    int n_runs = 0;
    bool single_run = false;
};

// Mean and standard error over run seeds, per (model, method, round).
// Seeds of one (model, method) must cover identical round sets.
std::vector<CellSummary> aggregate_runs(const std::vector<RunRecord>& records);

std::string results_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_results_csv(const std::string& text);

std::string aggregate_csv(const std::vector<CellSummary>& cells);

// Final-round summary, methods as rows and models as columns, each cell
// "mean +- se". Emitted as CSV and as an aligned text table.
std::string final_table_csv(const std::vector<CellSummary>& cells);
std::string final_table_text(const std::vector<CellSummary>& cells);

}  // namespace lfi::eval
