#include "lfi/eval/truth.hpp"

#include "lfi/density/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <vector>

namespace lfi::eval {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// 500 posterior draws via the discretized inverse-CDF: sample fine-grid
// cells by weight, jitter uniformly within the cell.
Mat sample_from_fine_grid(const LogDensityFn& log_post, const GridSpec& fine, int n,
                          Rng& rng) {
    const Vec lp = eval_on_grid(log_post, fine);
    std::vector<double> logs(lp.data(), lp.data() + lp.size());
    const double lse = log_sum_exp(logs);
    if (!std::isfinite(lse))
        throw NumericalError("truth posterior: density vanishes on the prior box");
    std::vector<double> w(logs.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = std::isfinite(logs[i]) ? std::exp(logs[i] - lse) : 0.0;
    std::discrete_distribution<Eigen::Index> cell(w.begin(), w.end());
    std::uniform_real_distribution<double> unit(-0.5, 0.5);

    Mat out(n, fine.dim());
    for (int i = 0; i < n; ++i) {
        Vec p = fine.point(cell(rng));
        for (int k = 0; k < fine.dim(); ++k) {
            const auto& axis = fine.axes[static_cast<std::size_t>(k)];
            const double step = axis[1] - axis[0];
            const auto [lo, hi] = fine.bounds(k);
            p[k] = std::clamp(p[k] + step * unit(rng), lo, hi);
        }
        out.row(i) = p.transpose();
    }
    return out;
}

int fine_points_for_dim(int k) {
    if (k == 1) return 2001;
    if (k == 2) return 201;
    return 61;
}

}  // namespace

LogDensityFn truth_log_posterior(const sim::ModelSpec& spec, const sim::Observation& obs) {
    require(spec.has_oracle(), "truth_log_posterior: model has no likelihood oracle");
    return [&spec, raw = obs.raw](const Vec& theta) {
        const double lp = spec.prior.log_density(theta);
        if (!std::isfinite(lp)) return neg_inf;
        return lp + spec.oracle_log_likelihood(raw, theta);
    };
}

TruthPosterior analytic_truth_posterior(const sim::ModelSpec& spec,
                                        const sim::Observation& obs, std::uint64_t seed,
                                        int points_per_dim) {
    require(spec.has_oracle(), "analytic_truth_posterior: model has no likelihood oracle");
    const LogDensityFn log_post = truth_log_posterior(spec, obs);

    const GridSpec fine =
        GridSpec::from_bounds(spec.prior.bounds, fine_points_for_dim(spec.param_dim));
    Rng rng = make_rng(seed, stream::evaluate);
    Mat ref = sample_from_fine_grid(log_post, fine, 500, rng);

    TruthPosterior truth;
    truth.grid = GridSpec::from_samples(ref, points_per_dim);
    truth.grid_log_density = eval_on_grid(log_post, truth.grid);
    truth.reference_samples = std::move(ref);
    return truth;
}

IsingAbcTable IsingAbcTable::build(const sim::ModelSpec& spec, int n_sims,
                                   std::uint64_t seed) {
    require(n_sims >= 1000000, "IsingAbcTable: need at least 1e6 prior simulations");
    require(static_cast<bool>(spec.known_sufficient_statistic),
            "IsingAbcTable: model lacks a known sufficient statistic");
    IsingAbcTable t;
    t.theta.resize(n_sims);
    t.sstar.resize(n_sims);
    Rng prior_rng = make_rng(seed, stream::proposal);
    for (int i = 0; i < n_sims; ++i) {
        const Vec theta = spec.prior.sample(prior_rng);
        const Vec x = spec.simulate(theta, mix_seed(seed, stream::simulate,
                                                    static_cast<std::uint64_t>(i)));
        t.theta[i] = theta[0];
        t.sstar[i] = spec.known_sufficient_statistic(x);
        if ((i + 1) % 100000 == 0)
            std::fprintf(stderr, "[ising-abc] %d / %d prior simulations\n", i + 1, n_sims);
    }
    return t;
}

namespace {

constexpr char abc_magic[8] = {'L', 'F', 'I', 'A', 'B', 'C', '1', '\0'};

}  // namespace

std::optional<IsingAbcTable> IsingAbcTable::try_load(const std::string& path, int n_sims,
                                                     std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8] = {};
    std::uint64_t n = 0, s = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&s), sizeof s);
    if (!in || !std::equal(magic, magic + 8, abc_magic)) return std::nullopt;
    if (n != static_cast<std::uint64_t>(n_sims) || s != seed) return std::nullopt;
    IsingAbcTable out;
    out.theta.resize(static_cast<Eigen::Index>(n));
    out.sstar.resize(static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(out.theta.data()), static_cast<std::streamsize>(n * 8));
    in.read(reinterpret_cast<char*>(out.sstar.data()), static_cast<std::streamsize>(n * 8));
    if (!in) return std::nullopt;
    return out;
}

void IsingAbcTable::save(const std::string& path, std::uint64_t seed) const {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), "IsingAbcTable: cannot write cache " + path);
        const std::uint64_t n = static_cast<std::uint64_t>(theta.size());
        out.write(abc_magic, sizeof abc_magic);
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
        out.write(reinterpret_cast<const char*>(theta.data()),
                  static_cast<std::streamsize>(n * 8));
        out.write(reinterpret_cast<const char*>(sstar.data()),
                  static_cast<std::streamsize>(n * 8));
        require(static_cast<bool>(out), "IsingAbcTable: write failed for " + path);
    }
    fs::rename(tmp, target);
}

IsingAbcTable IsingAbcTable::load_or_build(const std::string& cache_path,
                                           const sim::ModelSpec& spec, int n_sims,
                                           std::uint64_t seed) {
    if (auto t = try_load(cache_path, n_sims, seed)) return std::move(*t);
    IsingAbcTable t = build(spec, n_sims, seed);
    t.save(cache_path, seed);
    return t;
}

TruthPosterior ising_truth_posterior(const sim::ModelSpec& spec, const sim::Observation& obs,
                                     const IsingAbcTable& table, std::uint64_t seed,
                                     int points_per_dim) {
    require(static_cast<bool>(spec.known_sufficient_statistic),
            "ising_truth_posterior: model lacks a known sufficient statistic");
    const Eigen::Index n = table.theta.size();
    require(n == table.sstar.size() && n > 0, "ising_truth_posterior: malformed table");

    const double s_o = spec.known_sufficient_statistic(obs.x);
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] =
        std::abs(table.sstar[i] - s_o);

    std::vector<double> sorted = dist;
    const auto q_idx = static_cast<std::size_t>(n / 20);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q_idx),
                     sorted.end());
    const double threshold = sorted[q_idx];

    std::vector<double> accepted;
    for (Eigen::Index i = 0; i < n; ++i)
        if (dist[static_cast<std::size_t>(i)] <= threshold) accepted.push_back(table.theta[i]);
    if (accepted.size() < 50000)
        throw NumericalError("ising_truth_posterior: fewer than 5e4 accepted samples");

    Mat acc(static_cast<Eigen::Index>(accepted.size()), 1);
    for (std::size_t i = 0; i < accepted.size(); ++i)
        acc(static_cast<Eigen::Index>(i), 0) = accepted[i];

    const density::GmmModel gmm =
        density::gmm_fit_em(acc, 8, mix_seed(seed, stream::density));

    // 500 of the accepted draws fix the grid bounds
    std::vector<Eigen::Index> idx(accepted.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng = make_rng(seed, stream::evaluate);
    std::shuffle(idx.begin(), idx.end(), rng);
    Mat ref(500, 1);
    for (int i = 0; i < 500; ++i) ref(i, 0) = acc(idx[static_cast<std::size_t>(i)], 0);

    TruthPosterior truth;
    truth.grid = GridSpec::from_samples(ref, points_per_dim);
    truth.grid_log_density =
        eval_on_grid([&gmm](const Vec& th) { return gmm.log_density(th); }, truth.grid);
    truth.reference_samples = std::move(ref);
    return truth;
}

TruthPosterior truth_posterior(const sim::ModelSpec& spec, const sim::Observation& obs,
                               const std::string& cache_dir, std::uint64_t seed,
                               int points_per_dim) {
    if (spec.has_oracle()) return analytic_truth_posterior(spec, obs, seed, points_per_dim);
    require(static_cast<bool>(spec.known_sufficient_statistic),
            "truth_posterior: no oracle available for model " + spec.name);
    const std::string path = cache_dir + "/" + spec.name + "-abc-" +
                             std::to_string(ising_abc_table_size) + ".bin";
    const IsingAbcTable table =
        IsingAbcTable::load_or_build(path, spec, ising_abc_table_size, ising_abc_table_seed);
    return ising_truth_posterior(spec, obs, table, seed, points_per_dim);
}

}  // namespace lfi::eval
