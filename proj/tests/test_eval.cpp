#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lfi/eval/grid.hpp"
#include "lfi/eval/metrics.hpp"
#include "lfi/eval/truth.hpp"
#include "lfi/sim/model_spec.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace lfi;
using namespace lfi::eval;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Mat normal_draws(int n, std::uint64_t seed, double mean, double sd) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g(mean, sd);
    Mat m(n, 1);
    for (int i = 0; i < n; ++i) m(i, 0) = g(rng);
    return m;
}

Vec random_logs(Eigen::Index n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

Vec scalar_vec(double v) {
    Vec x(1);
    x[0] = v;
    return x;
}

}  // namespace

TEST_CASE("grid spec covers the sample range exactly") {
    Mat s(4, 2);
    s << 0.0, -1.0, 2.0, 3.0, 1.0, 0.5, 0.25, 2.0;
    const GridSpec grid = GridSpec::from_samples(s, 30);

    REQUIRE(grid.dim() == 2);
    CHECK(grid.total() == 900);
    CHECK(grid.bounds(0).first == 0.0);
    CHECK(grid.bounds(0).second == 2.0);
    CHECK(grid.bounds(1).first == -1.0);
    CHECK(grid.bounds(1).second == 3.0);

    // last axis fastest
    CHECK(grid.point(0)[0] == 0.0);
    CHECK(grid.point(0)[1] == -1.0);
    CHECK(grid.point(29)[1] == 3.0);
    CHECK(grid.point(30)[0] == doctest::Approx(2.0 / 29).epsilon(1e-12));
    CHECK(grid.point(899)[0] == 2.0);

    const double step0 = 2.0 / 29, step1 = 4.0 / 29;
    CHECK(grid.cell_volume() == doctest::Approx(step0 * step1).epsilon(1e-12));
}

TEST_CASE("grid spec rejects degenerate input") {
    Mat s(3, 1);
    s << 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(GridSpec::from_samples(s, 30), NumericalError);
    CHECK_THROWS_AS(GridSpec::from_bounds({{0.0, 1.0}}, 1), ContractViolation);
    CHECK_THROWS_AS(GridSpec::from_bounds({}, 30), ContractViolation);
    Mat one = Mat::Zero(1, 1);
    CHECK_THROWS_AS(GridSpec::from_samples(one, 30), ContractViolation);
}

TEST_CASE("identical densities give zero divergence") {
    const GridSpec grid = GridSpec::from_bounds({{0.0, 1.0}}, 30);
    const Vec lp = random_logs(30, 5);
    CHECK(grid_jsd_values(lp, lp, grid).value <= 1e-12);

    Vec lq = lp;
    lq[7] += 0.3;
    CHECK(grid_jsd_values(lp, lq, grid).value > 1e-6);
}

TEST_CASE("disjoint supports give ln 2") {
    const GridSpec grid = GridSpec::from_bounds({{0.0, 1.0}}, 30);
    Vec lp = Vec::Constant(30, -inf), lq = Vec::Constant(30, -inf);
    for (int i = 0; i < 15; ++i) lp[i] = 0.0;
    for (int i = 15; i < 30; ++i) lq[i] = 0.0;
    const GridJsdResult r = grid_jsd_values(lp, lq, grid);
    CHECK(std::abs(r.value - std::log(2.0)) < 1e-9);
}

TEST_CASE("divergence is symmetric and bounded") {
    const GridSpec grid = GridSpec::from_bounds({{0.0, 1.0}, {0.0, 1.0}}, 9);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const Vec lp = 3.0 * random_logs(grid.total(), seed);
        const Vec lq = 3.0 * random_logs(grid.total(), seed + 100);
        const double ab = grid_jsd_values(lp, lq, grid).value;
        const double ba = grid_jsd_values(lq, lp, grid).value;
        CHECK(std::abs(ab - ba) < 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= std::log(2.0) + 1e-9);
    }
}

TEST_CASE("gaussian pair matches a high-resolution quadrature oracle") {
    const GridSpec grid = GridSpec::from_bounds({{-8.0, 9.0}}, 200);
    const auto lp = [](const Vec& th) { return norm_logpdf(th[0]); };
    const auto lq = [](const Vec& th) { return norm_logpdf(th[0] - 1.0); };
    const double got = grid_jsd(lp, lq, grid).value;

    // independent quadrature: renormalized weights on a 1e5-point grid
    const int n = 100000;
    std::vector<double> p(n), q(n);
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -8.0 + 17.0 * i / (n - 1);
        p[i] = std::exp(-0.5 * x * x);
        q[i] = std::exp(-0.5 * (x - 1.0) * (x - 1.0));
        sp += p[i];
        sq += q[i];
    }
    double oracle = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pi = p[i] / sp, qi = q[i] / sq, mi = 0.5 * (pi + qi);
        if (pi > 0.0) oracle += 0.5 * pi * std::log(pi / mi);
        if (qi > 0.0) oracle += 0.5 * qi * std::log(qi / mi);
    }

    CHECK(std::abs(got - oracle) < 1e-3);
    CHECK(got > 0.05);  // the pair is genuinely separated
}

TEST_CASE("mass warning flags support escape") {
    const auto lp = [](const Vec& th) { return norm_logpdf(th[0]); };

    const GridSpec far = GridSpec::from_bounds({{10.0, 12.0}}, 30);
    CHECK(grid_jsd(lp, lp, far).mass_warning);

    const GridSpec wide = GridSpec::from_bounds({{-8.0, 8.0}}, 200);
    const GridJsdResult r = grid_jsd(lp, lp, wide);
    CHECK_FALSE(r.mass_warning);
    CHECK(r.p_grid_mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.q_grid_mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("gaussian sample fit stays close to its generator") {
    const double mu = 1.0, sd = 0.5;
    const Mat fit_samples = normal_draws(5000, 11, mu, sd);
    const Mat truth_draws = normal_draws(500, 12, mu, sd);

    TruthPosterior truth;
    truth.grid = GridSpec::from_samples(truth_draws, 30);
    truth.grid_log_density = eval_on_grid(
        [&](const Vec& th) { return norm_logpdf((th[0] - mu) / sd) - std::log(sd); },
        truth.grid);
    truth.reference_samples = truth_draws;

    GridJsdResult detail;
    const double jsd = posterior_sample_jsd(fit_samples, truth, 13, &detail);
    CHECK(jsd <= 0.01);
    // the fit integrates to ~1 over the truth grid
    CHECK(detail.q_grid_mass == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("bimodal fit covers both modes") {
    Mat samples(2000, 1);
    samples.topRows(1000) = normal_draws(1000, 21, 0.0, 0.5);
    samples.bottomRows(1000) = normal_draws(1000, 22, 10.0, 0.5);

    const density::GmmModel fit = approx_density_from_samples(samples, 23);
    double w_low = 0.0, w_high = 0.0;
    for (int c = 0; c < fit.component_count(); ++c) {
        const double m = fit.means[static_cast<std::size_t>(c)][0];
        const bool near_low = std::abs(m - 0.0) < 1.5;
        const bool near_high = std::abs(m - 10.0) < 1.5;
        CHECK((near_low || near_high));  // every component sits on a mode
        if (near_low) w_low += fit.weights[c];
        if (near_high) w_high += fit.weights[c];
    }
    CHECK(w_low > 0.2);
    CHECK(w_high > 0.2);
}

TEST_CASE("density approximation needs enough samples") {
    CHECK_THROWS_AS(approx_density_from_samples(normal_draws(150, 3, 0.0, 1.0), 1),
                    ContractViolation);
}

TEST_CASE("sufficiency probe on exact and transformed statistics") {
    const sim::ModelSpec spec = sim::make_linear_gaussian_spec(10);

    const auto exact = [](const Vec& x) { return scalar_vec(x.mean()); };
    const SufficiencyProbe p1 = sufficiency_monotonicity(exact, spec, 500, 31);
    CHECK(p1.spearman == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(p1.first_coord_only);
    CHECK(p1.scatter.rows() == 500);
    CHECK(p1.scatter.col(0).isApprox(p1.scatter.col(1), 1e-12));

    // rank correlation is invariant under strictly increasing transforms
    const auto affine = [](const Vec& x) { return scalar_vec(-2.0 * x.mean() + 5.0); };
    const SufficiencyProbe p2 = sufficiency_monotonicity(affine, spec, 500, 31);
    CHECK(p2.spearman == doctest::Approx(-1.0).epsilon(1e-12));

    const auto warped = [](const Vec& x) { return scalar_vec(std::tanh(x.mean())); };
    const SufficiencyProbe p3 = sufficiency_monotonicity(warped, spec, 500, 31);
    CHECK(std::abs(p3.spearman - p1.spearman) < 1e-12);

    const auto pair = [](const Vec& x) {
        Vec s(2);
        s << x.mean(), x[0];
        return s;
    };
    const SufficiencyProbe p4 = sufficiency_monotonicity(pair, spec, 500, 31);
    CHECK(p4.first_coord_only);
    CHECK(p4.spearman == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(sufficiency_monotonicity(exact, spec, 400, 31), ContractViolation);
    CHECK_THROWS_AS(sufficiency_monotonicity(exact, sim::make_ou_spec(), 500, 31),
                    ContractViolation);
}

TEST_CASE("spearman handles ties and rejects constants") {
    Vec a(4), b(4);
    a << 1.0, 1.0, 2.0, 3.0;
    b << 1.0, 2.0, 3.0, 4.0;
    // ranks (1.5, 1.5, 3, 4) vs (1, 2, 3, 4): rho = 4.5/sqrt(4.5*5)
    CHECK(spearman_rho(a, b) == doctest::Approx(std::sqrt(0.9)).epsilon(1e-12));

    const Vec c = Vec::Constant(4, 2.0);
    CHECK_THROWS_AS(spearman_rho(c, b), NumericalError);
    CHECK_THROWS_AS(spearman_rho(a.head(2), b.head(2)), ContractViolation);
}

TEST_CASE("run aggregation reproduces the hand example") {
    std::vector<RunRecord> records;
    const double jsds[3] = {0.01, 0.02, 0.03};
    for (int s = 0; s < 3; ++s)
        records.push_back({"ou", "snl+", static_cast<std::uint64_t>(s + 1), 1, 1000,
                           jsds[s], 1.0});

    const auto cells = aggregate_runs(records);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].mean_jsd == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(cells[0].se_jsd == doctest::Approx(0.01 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(cells[0].se_jsd == doctest::Approx(0.005774).epsilon(1e-4));
    CHECK(cells[0].n_runs == 3);
    CHECK_FALSE(cells[0].single_run);

    const auto single = aggregate_runs({records[0]});
    REQUIRE(single.size() == 1);
    CHECK(single[0].se_jsd == 0.0);
    CHECK(single[0].single_run);
}

TEST_CASE("run aggregation covers every cell and rejects bad input") {
    std::vector<RunRecord> records;
    for (const char* model : {"ising", "ou"})
        for (const char* method : {"snl+", "smc-abc+"})
            records.push_back({model, method, 1, 1, 1000, 0.1, 1.0});
    CHECK(aggregate_runs(records).size() == 4);  // models x methods

    auto dup = records;
    dup.push_back(records[0]);
    CHECK_THROWS_AS(aggregate_runs(dup), ContractViolation);

    auto mismatched = records;
    mismatched.push_back({"ising", "snl+", 2, 1, 1000, 0.2, 1.0});
    mismatched.push_back({"ising", "snl+", 2, 2, 2000, 0.1, 1.0});
    CHECK_THROWS_AS(aggregate_runs(mismatched), ContractViolation);

    auto sims_clash = records;
    sims_clash.push_back({"ising", "snl+", 2, 1, 999, 0.2, 1.0});
    CHECK_THROWS_AS(aggregate_runs(sims_clash), ContractViolation);
}

TEST_CASE("results csv round trips byte for byte") {
    std::vector<RunRecord> records;
    records.push_back({"ou", "snl+", 17, 3, 3000, 0.1 + 0.2, 12.345678901234});
    records.push_back({"gaussian_copula", "smc-abc-expert", 2, 1, 1000, 1e-9, 0.5});

    const std::string csv = results_csv(records);
    const auto parsed = parse_results_csv(csv);
    REQUIRE(parsed.size() == 2);
    CHECK(results_csv(parsed) == csv);
    CHECK(parsed[0].jsd == 0.1 + 0.2);

    CHECK_THROWS_AS(parse_results_csv("bogus\n1,2,3"), ContractViolation);
}

TEST_CASE("summary tables format the final round") {
    std::vector<RunRecord> records;
    for (int round : {1, 2}) {
        records.push_back({"ising", "snl+", 1, round, 1000 * round, 0.5 / round, 1.0});
        records.push_back({"ising", "smc-abc+", 1, round, 1000 * round, 0.4 / round, 1.0});
        records.push_back({"ou", "snl+", 1, round, 1000 * round, 0.3 / round, 1.0});
    }
    const auto cells = aggregate_runs(records);
    CHECK(cells.size() == 6);

    const std::string csv = final_table_csv(cells);
    CHECK(csv.substr(0, csv.find('\n')) == "method,ising,ou");
    CHECK(csv.find("smc-abc+,0.200 +- 0.000,-") != std::string::npos);
    CHECK(csv.find("snl+,0.250 +- 0.000,0.150 +- 0.000") != std::string::npos);

    const std::string text = final_table_text(cells);
    CHECK(text.find("method") == 0);
    CHECK(text.find("+-") != std::string::npos);
    // smc-abc+ row comes before snl+ (canonical method order)
    CHECK(text.find("smc-abc+") < text.find("snl+"));
}

TEST_CASE("ou truth posterior is sane and stable under grid refinement") {
    const sim::ModelSpec spec = sim::make_ou_spec();
    const sim::Observation obs = spec.observe(spec.true_theta, 99);

    const TruthPosterior truth = analytic_truth_posterior(spec, obs, 7);
    REQUIRE(truth.grid.dim() == 2);
    CHECK(truth.grid.total() == 900);
    REQUIRE(truth.reference_samples.rows() == 500);
    for (Eigen::Index i = 0; i < truth.reference_samples.rows(); ++i)
        CHECK(spec.prior.contains(truth.reference_samples.row(i).transpose()));

    // renormalized grid weights sum to one
    std::vector<double> logs(truth.grid_log_density.data(),
                             truth.grid_log_density.data() + truth.grid_log_density.size());
    const double lse = log_sum_exp(logs);
    REQUIRE(std::isfinite(lse));
    double total = 0.0;
    for (double l : logs) total += std::isfinite(l) ? std::exp(l - lse) : 0.0;
    CHECK(total == doctest::Approx(1.0).epsilon(0.01));

    // grid argmax near the generating parameters
    Eigen::Index best = 0;
    truth.grid_log_density.maxCoeff(&best);
    const Vec mode = truth.grid.point(best);
    CHECK(std::abs(mode[0] - spec.true_theta[0]) <= 0.2);
    CHECK(std::abs(mode[1] - spec.true_theta[1]) <= 0.4);

    // self-test is exactly zero at both resolutions; a benchmark value moves
    // by < 5% when the grid doubles
    CHECK(grid_jsd_values(truth.grid_log_density, truth.grid_log_density, truth.grid).value <
          1e-6);
    const TruthPosterior truth60 = analytic_truth_posterior(spec, obs, 7, 60);
    CHECK(grid_jsd_values(truth60.grid_log_density, truth60.grid_log_density,
                          truth60.grid).value < 1e-6);

    const density::GmmModel gmm = approx_density_from_samples(truth.reference_samples, 5);
    const auto lq = [&gmm](const Vec& th) { return gmm.log_density(th); };
    const double j30 =
        grid_jsd_values(truth.grid_log_density, eval_on_grid(lq, truth.grid), truth.grid)
            .value;
    const double j60 = grid_jsd_values(truth60.grid_log_density,
                                       eval_on_grid(lq, truth60.grid), truth60.grid)
                           .value;
    CHECK(j30 > 0.0);
    CHECK(std::abs(j60 - j30) / j30 < 0.05);
}

TEST_CASE("gc truth respects the prior box") {
    const sim::ModelSpec spec = sim::make_gaussian_copula_spec();
    const sim::Observation obs = spec.observe(spec.true_theta, 123);
    const LogDensityFn lp = truth_log_posterior(spec, obs);

    Vec inside(3), outside(3);
    inside << 6.0, 0.5, 0.6;
    outside << 6.0, 0.5, 0.9;  // third coordinate leaves (0.4, 0.8)
    CHECK(std::isfinite(lp(inside)));
    CHECK(lp(outside) == -inf);

    const TruthPosterior truth = analytic_truth_posterior(spec, obs, 7, 12);
    REQUIRE(truth.grid.dim() == 3);
    CHECK(truth.grid.total() == 12 * 12 * 12);
    REQUIRE(truth.reference_samples.rows() == 500);
    for (Eigen::Index i = 0; i < 500; ++i)
        CHECK(spec.prior.contains(truth.reference_samples.row(i).transpose()));
    CHECK(truth.grid_log_density.maxCoeff() >
          truth.grid_log_density.minCoeff());  // not flat
}

TEST_CASE("ising truth machinery works on a synthetic table") {
    const sim::ModelSpec spec = sim::make_ising_spec();
    const sim::Observation obs = spec.observe(spec.true_theta, 42);
    const double s_o = spec.known_sufficient_statistic(obs.x);

    // synthetic table: s* responds linearly to theta, cheap to generate
    const int n = 1000000;
    IsingAbcTable table;
    table.theta.resize(n);
    table.sstar.resize(n);
    Rng rng = make_rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    std::normal_distribution<double> noise(0.0, 3.0);
    for (int i = 0; i < n; ++i) {
        table.theta[i] = u(rng);
        table.sstar[i] = 200.0 * table.theta[i] + noise(rng);
    }

    const TruthPosterior truth = ising_truth_posterior(spec, obs, table, 9);
    REQUIRE(truth.grid.dim() == 1);
    REQUIRE(truth.reference_samples.rows() == 500);

    Eigen::Index best = 0;
    truth.grid_log_density.maxCoeff(&best);
    CHECK(std::abs(truth.grid.point(best)[0] - s_o / 200.0) <= 0.05);

    // small tables cannot reach the required acceptance count
    IsingAbcTable tiny;
    tiny.theta = table.theta.head(1000);
    tiny.sstar = table.sstar.head(1000);
    CHECK_THROWS_AS(ising_truth_posterior(spec, obs, tiny, 9), NumericalError);

    CHECK_THROWS_AS(IsingAbcTable::build(spec, 1000, 1), ContractViolation);
}

TEST_CASE("ising table cache round trips") {
    IsingAbcTable t;
    t.theta.resize(100);
    t.sstar.resize(100);
    Rng rng = make_rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        t.theta[i] = g(rng);
        t.sstar[i] = g(rng);
    }

    const std::string path =
        (std::filesystem::temp_directory_path() / "lfi-test-abc-cache.bin").string();
    t.save(path, 99);

    const auto loaded = IsingAbcTable::try_load(path, 100, 99);
    REQUIRE(loaded.has_value());
    CHECK(loaded->theta == t.theta);
    CHECK(loaded->sstar == t.sstar);

    CHECK_FALSE(IsingAbcTable::try_load(path, 100, 98).has_value());
    CHECK_FALSE(IsingAbcTable::try_load(path, 101, 99).has_value());
    CHECK_FALSE(IsingAbcTable::try_load(path + ".missing", 100, 99).has_value());
    std::filesystem::remove(path);
}
