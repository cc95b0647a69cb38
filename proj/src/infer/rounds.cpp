#include "lfi/infer/rounds.hpp"

#include "lfi/eval/metrics.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <utility>

namespace lfi::infer {

namespace {

struct MethodInfo {
    MethodKind kind;
    const char* name;
    bool smc;
    bool learned;
    bool expert;
};

constexpr MethodInfo kMethods[] = {
    {MethodKind::SmcAbcPlus, "smc-abc+", true, true, false},
    {MethodKind::SmcAbc, "smc-abc", true, false, false},
    {MethodKind::SmcAbcExpert, "smc-abc-expert", true, false, true},
    {MethodKind::SnlPlus, "snl+", false, true, false},
    {MethodKind::Snl, "snl", false, false, false},
    {MethodKind::SnlExpert, "snl-expert", false, false, true},
};

const MethodInfo& info(MethodKind m) {
    for (const MethodInfo& mi : kMethods)
        if (mi.kind == m) return mi;
    throw ConfigError("unknown method kind");
}

// The per-round statistic map: closures plus what the artifacts record.
struct RoundStatistic {
    std::function<Mat(const Mat&)> apply;
    std::function<Vec(const Vec&)> apply_row;
    nlohmann::json checkpoint;
    double objective = std::numeric_limits<double>::quiet_NaN();
    bool near_constant = false;
    std::shared_ptr<const mi::StatisticModel> model;  // kept for warm starts
};

RoundStatistic identity_statistic(int data_dim) {
    RoundStatistic stat;
    stat.apply = [](const Mat& x) { return x; };
    stat.apply_row = [](const Vec& x) { return x; };
    stat.checkpoint = {{"kind", "identity"}, {"dim", data_dim}};
    return stat;
}

RoundStatistic expert_statistic(const sim::ModelSpec& spec) {
    require(static_cast<bool>(spec.expert_statistic), "run: model has no expert statistic");
    auto fn = spec.expert_statistic;
    const int d = spec.expert_dim;
    RoundStatistic stat;
    stat.apply = [fn, d](const Mat& x) {
        Mat s(x.rows(), d);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            s.row(i) = fn(x.row(i).transpose()).transpose();
        return s;
    };
    stat.apply_row = fn;
    stat.checkpoint = {{"kind", "expert"}, {"dim", d}};
    return stat;
}

RoundStatistic learned_statistic(const RoundDataset& data, const MethodConfig& cfg, int round,
                                 const mi::StatisticModel* warm_start) {
    mi::InfomaxConfig icfg = cfg.infomax;
    icfg.train.seed = mix_seed(cfg.seed, stream::statistic, static_cast<std::uint64_t>(round));
    mi::TrainedStatistic trained = mi::train_statistic(data.thetas, data.xs, icfg, warm_start);

    RoundStatistic stat;
    stat.model = std::make_shared<const mi::StatisticModel>(std::move(trained.model));
    auto model = stat.model;
    stat.apply = [model](const Mat& x) { return model->apply(x); };
    stat.apply_row = [model](const Vec& x) { return model->apply_row(x); };
    stat.checkpoint = mi::statistic_to_json(*model);
    stat.objective = trained.best_objective;
    stat.near_constant = trained.near_constant;
    return stat;
}

}  // namespace

const char* method_name(MethodKind m) { return info(m).name; }

MethodKind method_from_name(const std::string& name) {
    for (const MethodInfo& mi : kMethods)
        if (name == mi.name) return mi.kind;
    throw ConfigError("unknown method name: " + name);
}

const std::vector<MethodKind>& all_methods() {
    static const std::vector<MethodKind> order = {
        MethodKind::SmcAbcPlus, MethodKind::SmcAbc, MethodKind::SmcAbcExpert,
        MethodKind::SnlPlus,    MethodKind::Snl,    MethodKind::SnlExpert,
    };
    return order;
}

bool method_is_smc(MethodKind m) { return info(m).smc; }
bool method_is_learned(MethodKind m) { return info(m).learned; }
bool method_is_expert(MethodKind m) { return info(m).expert; }

void RoundDataset::append_round(const Mat& round_thetas, const Mat& round_xs) {
    require(round_thetas.rows() == round_xs.rows(), "RoundDataset: theta/x row mismatch");
    require(round_thetas.rows() >= 1, "RoundDataset: empty round");
    if (rounds_done == 0) {
        per_round = static_cast<int>(round_thetas.rows());
        thetas = round_thetas;
        xs = round_xs;
    } else {
        require(static_cast<int>(round_thetas.rows()) == per_round,
                "RoundDataset: round size changed");
        require(round_thetas.cols() == thetas.cols() && round_xs.cols() == xs.cols(),
                "RoundDataset: dimension changed");
        const Eigen::Index old_rows = thetas.rows();
        thetas.conservativeResize(old_rows + per_round, Eigen::NoChange);
        xs.conservativeResize(old_rows + per_round, Eigen::NoChange);
        thetas.bottomRows(per_round) = round_thetas;
        xs.bottomRows(per_round) = round_xs;
    }
    ++rounds_done;
    round_of.insert(round_of.end(), static_cast<std::size_t>(per_round), rounds_done);
}

sim::Observation observation_fixture(const sim::ModelSpec& spec) {
    return spec.observe(spec.true_theta, observation_fixture_seed);
}

RunResult run_inference(const sim::ModelSpec& spec, const sim::Observation& obs,
                        const MethodConfig& cfg, const eval::TruthPosterior* truth,
                        const RunHooks& hooks) {
    const MethodInfo& mi_ = info(cfg.method);
    require(cfg.rounds >= 1, "run: rounds must be positive");
    require(cfg.n_per_round >= 1, "run: n_per_round must be positive");
    require(cfg.posterior_sample_count >= 1, "run: posterior_sample_count must be positive");
    if (mi_.smc)
        require(cfg.top_m >= 20 && cfg.top_m <= cfg.n_per_round,
                "run: top_m must lie in [20, n_per_round]");
    require(obs.x.size() == spec.data_dim, "run: observation dimension mismatch");

    RunResult out;
    out.model = spec.name;
    out.method = mi_.name;
    out.seed = cfg.seed;

    ProposalMixture mix = prior_mixture(spec.prior);
    PosteriorEstimate current = prior_estimate(spec.prior);
    std::shared_ptr<const mi::StatisticModel> previous_model;

    for (int round = 1; round <= cfg.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        RoundOutput ro;
        ro.round = round;

        // Draw this round's parameters from the current proposal. For SMC the
        // proposal joins the mixture with its normalizing constant estimated
        // from the rejection acceptance rate.
        SampleBatch batch = current.sample_batch(
            cfg.n_per_round, mix_seed(cfg.seed, stream::proposal, static_cast<std::uint64_t>(round)));
        ro.proposal_acceptance = batch.acceptance_rate;
        if (mi_.smc && current.kind != "prior") {
            auto prev_log_density = current.log_density;
            const double log_z = batch.log_normalizer();
            mix.add([prev_log_density, log_z](const Vec& theta) {
                return prev_log_density(theta) - log_z;
            });
        }

        ro.round_thetas = std::move(batch.thetas);
        ro.round_xs.resize(cfg.n_per_round, spec.data_dim);
        for (int i = 0; i < cfg.n_per_round; ++i) {
            const std::uint64_t sim_seed =
                mix_seed(cfg.seed, stream::simulate, static_cast<std::uint64_t>(round),
                         static_cast<std::uint64_t>(i));
            ro.round_xs.row(i) = spec.simulate(ro.round_thetas.row(i).transpose(), sim_seed);
        }
        out.dataset.append_round(ro.round_thetas, ro.round_xs);
        ro.sims_cumulative = static_cast<long long>(out.dataset.size());

        RoundStatistic stat;
        if (mi_.learned) {
            stat = learned_statistic(out.dataset, cfg, round,
                                     cfg.warm_start ? previous_model.get() : nullptr);
            previous_model = stat.model;
        } else if (mi_.expert) {
            stat = expert_statistic(spec);
        } else {
            stat = identity_statistic(spec.data_dim);
        }
        ro.statistic_checkpoint = stat.checkpoint;
        ro.statistic_objective = stat.objective;
        ro.statistic_near_constant = stat.near_constant;

        const Mat stat_values = stat.apply(out.dataset.xs);
        const Vec stat_obs = stat.apply_row(obs.x);

        if (mi_.smc) {
            std::vector<int> accepted = select_top_m(stat_values, stat_obs, cfg.top_m);
            Mat top_thetas = gather_rows(out.dataset.thetas, accepted);
            FitDensity fit;
            try {
                density::ParametricPosteriorFit pf = density::fit_parametric_posterior(top_thetas);
                ro.density_checkpoint = density::copula_to_json(pf);
                fit = fit_density(std::move(pf));
            } catch (const NumericalError&) {
                ro.degenerate_fit_fallback = true;
                fit = widened_gaussian_fallback(top_thetas, spec.prior);
                ro.density_checkpoint = {{"kind", "widened-gaussian-fallback"}};
            }
            current = smc_reweight(std::move(fit), spec.prior, mix, round);
        } else {
            density::MafFitConfig mcfg = cfg.maf;
            mcfg.train.seed = mix_seed(cfg.seed, stream::density, static_cast<std::uint64_t>(round));
            try {
                density::MafFitResult fitres =
                    density::maf_fit(out.dataset.thetas, stat_values, mcfg);
                ro.density_checkpoint = density::maf_to_json(fitres.density);
                auto flow = std::make_shared<const density::MafDensity>(std::move(fitres.density));
                auto conditional = [flow, stat_obs](const Vec& theta) {
                    return flow->log_density_row(stat_obs, theta);
                };
                current = snl_posterior(conditional, spec.prior, round);
            } catch (const NumericalError& e) {
                // Divergent flow fit: keep sampling from the previous estimate.
                ro.density_fit_failed = true;
                ro.density_checkpoint = {{"kind", "reused-previous"}, {"error", e.what()}};
            }
        }
        ro.estimate = current;

        SampleBatch posterior = current.sample_batch(
            cfg.posterior_sample_count,
            mix_seed(cfg.seed, stream::evaluate, static_cast<std::uint64_t>(round), 0));
        ro.posterior_samples = std::move(posterior.thetas);
        if (truth != nullptr)
            ro.jsd = eval::posterior_sample_jsd(
                ro.posterior_samples, *truth,
                mix_seed(cfg.seed, stream::evaluate, static_cast<std::uint64_t>(round), 1));

        ro.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.rounds.push_back(std::move(ro));
        if (hooks.on_round) hooks.on_round(out.rounds.back());
    }
    return out;
}

RunResult run_smc_abc_plus(const sim::ModelSpec& spec, const sim::Observation& obs,
                           const MethodConfig& cfg, const eval::TruthPosterior* truth,
                           const RunHooks& hooks) {
    require(cfg.method == MethodKind::SmcAbcPlus, "run_smc_abc_plus: wrong method in config");
    return run_inference(spec, obs, cfg, truth, hooks);
}

RunResult run_snl_plus(const sim::ModelSpec& spec, const sim::Observation& obs,
                       const MethodConfig& cfg, const eval::TruthPosterior* truth,
                       const RunHooks& hooks) {
    require(cfg.method == MethodKind::SnlPlus, "run_snl_plus: wrong method in config");
    return run_inference(spec, obs, cfg, truth, hooks);
}

RunResult run_baseline(const sim::ModelSpec& spec, const sim::Observation& obs,
                       const MethodConfig& cfg, const eval::TruthPosterior* truth,
                       const RunHooks& hooks) {
    require(!method_is_learned(cfg.method), "run_baseline: method trains a statistic");
    return run_inference(spec, obs, cfg, truth, hooks);
}

}  // namespace lfi::infer
