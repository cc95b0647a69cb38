#include "lfi/cli/experiment.hpp"

#include "lfi/infer/rounds.hpp"
#include "lfi/nn/checkpoint.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>

namespace lfi::cli {

namespace fs = std::filesystem;

namespace {

nlohmann::json round_metrics_json(const infer::RoundOutput& ro, const std::string& model,
                                  const std::string& method, std::uint64_t master_seed) {
    // Deterministic fields only: timings live in results.csv and the
    // manifest, so a rerun reproduces this file byte for byte.
    return {{"round", ro.round},      {"method", method},
            {"model", model},         {"jsd", ro.jsd},
            {"sim_count", ro.sims_cumulative}, {"seed", master_seed}};
}

std::vector<std::string> round_file_names() {
    return {"data.csv", "statistic.json", "density.json", "posterior_samples.csv",
            "metrics.json"};
}

}  // namespace

std::string run_dir_for(const std::string& out_dir, const std::string& model,
                        const std::string& method, std::uint64_t seed) {
    return out_dir + "/" + model + "/" + method + "/seed-" + std::to_string(seed);
}

eval::TruthPosterior build_truth(const sim::ModelSpec& spec, const sim::Observation& obs,
                                 const std::string& cache_dir) {
    ensure_dir(cache_dir);
    return eval::truth_posterior(spec, obs, cache_dir, truth_reference_seed);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    const std::string out_dir = resolved_out_dir(cfg);
    const sim::ModelSpec spec = sim::make_model_spec(cfg.model);
    const sim::Observation obs = infer::observation_fixture(spec);

    std::optional<eval::TruthPosterior> truth;
    if (cfg.evaluate) {
        log << "building ground truth for " << cfg.model << "\n" << std::flush;
        truth = build_truth(spec, obs, cfg.cache_dir);
    }

    ExperimentResult result;
    for (infer::MethodKind method : cfg.methods) {
        for (std::uint64_t seed : cfg.seeds) {
            const std::string run_dir = run_dir_for(out_dir, cfg.model,
                                                    infer::method_name(method), seed);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                std::error_code ec;
                fs::remove_all(run_dir, ec);  // stale artifacts would shadow this run
                ensure_dir(run_dir);

                RunManifest manifest;
                manifest.model = cfg.model;
                manifest.method = infer::method_name(method);
                manifest.seed = seed;
                manifest.run_seed = derive_run_seed(seed, method);
                manifest.seed_scheme = seed_scheme_description;
                manifest.build = build_id();
                manifest.config = config_to_kv(cfg);
                manifest.format_versions = {{"checkpoint", nn::checkpoint_format_version},
                                            {"metrics", metrics_format_version},
                                            {"results_csv", results_csv_format_version}};
                write_manifest(run_dir, manifest);

                std::vector<eval::RunRecord> run_records;
                infer::RunHooks hooks;
                hooks.on_round = [&](const infer::RoundOutput& ro) {
                    const std::string round_dir =
                        run_dir + "/round-" + std::to_string(ro.round);
                    ensure_dir(round_dir);

                    Mat data(ro.round_thetas.rows(),
                             ro.round_thetas.cols() + ro.round_xs.cols());
                    data << ro.round_thetas, ro.round_xs;
                    std::vector<std::string> cols =
                        indexed_columns("theta", static_cast<int>(ro.round_thetas.cols()));
                    const std::vector<std::string> xcols =
                        indexed_columns("x", static_cast<int>(ro.round_xs.cols()));
                    cols.insert(cols.end(), xcols.begin(), xcols.end());
                    write_file_atomic(round_dir + "/data.csv", matrix_csv(data, cols));

                    write_file_atomic(round_dir + "/statistic.json",
                                      ro.statistic_checkpoint.dump(2) + "\n");
                    write_file_atomic(round_dir + "/density.json",
                                      ro.density_checkpoint.dump(2) + "\n");
                    write_file_atomic(
                        round_dir + "/posterior_samples.csv",
                        matrix_csv(ro.posterior_samples,
                                   indexed_columns("theta",
                                                   static_cast<int>(ro.posterior_samples.cols()))));
                    write_file_atomic(
                        round_dir + "/metrics.json",
                        round_metrics_json(ro, cfg.model, infer::method_name(method), seed)
                                .dump(2) +
                            "\n");

                    run_records.push_back(eval::RunRecord{
                        cfg.model, infer::method_name(method), manifest.run_seed, ro.round,
                        ro.sims_cumulative, ro.jsd, ro.wall_time_s});
                    manifest.files["round-" + std::to_string(ro.round)] = round_file_names();

                    log << cfg.model << "/" << infer::method_name(method) << "/seed-" << seed
                        << " round " << ro.round << "/" << cfg.rounds;
                    if (truth) log << " jsd=" << format_double(ro.jsd);
                    log << " sims=" << ro.sims_cumulative << " ("
                        << format_double(ro.wall_time_s) << "s)";
                    if (ro.degenerate_fit_fallback) log << " [fit fallback]";
                    if (ro.density_fit_failed) log << " [flow diverged, proposal reused]";
                    log << "\n" << std::flush;
                };

                const infer::MethodConfig mc = method_config(cfg, method, seed);
                const infer::RunResult run = infer::run_inference(
                    spec, obs, mc, truth ? &truth.value() : nullptr, hooks);
                require(run.rounds.size() == run_records.size(),
                        "run_experiment: hook missed a round");

                write_file_atomic(run_dir + "/results.csv", eval::results_csv(run_records));
                manifest.files["run"] = {"manifest.json", "results.csv"};
                manifest.status = "complete";
                manifest.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                write_manifest(run_dir, manifest);

                result.records.insert(result.records.end(), run_records.begin(),
                                      run_records.end());
                result.run_dirs.push_back(run_dir);
            } catch (const std::exception& e) {
                log << "run failed: " << cfg.model << "/" << infer::method_name(method)
                    << "/seed-" << seed << ": " << e.what() << "\n"
                    << std::flush;
                result.exit_status = 1;
            }
        }
    }
    return result;
}

std::vector<eval::RunRecord> eval_run_dir(const std::string& run_dir, std::ostream& log) {
    const RunManifest manifest = read_manifest(run_dir);
    require(manifest.status == "complete", "eval: run is not complete: " + run_dir);

    const sim::ModelSpec spec = sim::make_model_spec(manifest.model);
    const sim::Observation obs = infer::observation_fixture(spec);
    const std::string cache_dir = manifest.config.count("cache") != 0
                                      ? manifest.config.at("cache")
                                      : std::string(".lfi-cache");
    const eval::TruthPosterior truth = build_truth(spec, obs, cache_dir);

    std::vector<eval::RunRecord> records;
    for (int round = 1;; ++round) {
        const std::string key = "round-" + std::to_string(round);
        if (manifest.files.count(key) == 0) break;
        const std::string round_dir = run_dir + "/" + key;
        const Mat samples = parse_matrix_csv(read_file(round_dir + "/posterior_samples.csv"));
        const double jsd = eval::posterior_sample_jsd(
            samples, truth,
            mix_seed(manifest.run_seed, stream::evaluate, static_cast<std::uint64_t>(round), 1));
        const nlohmann::json metrics =
            nlohmann::json::parse(read_file(round_dir + "/metrics.json"));
        records.push_back(eval::RunRecord{manifest.model, manifest.method, manifest.run_seed,
                                          round, metrics.at("sim_count").get<long long>(), jsd,
                                          0.0});
        log << run_dir << " round " << round << " jsd=" << format_double(jsd) << "\n"
            << std::flush;
    }
    require(!records.empty(), "eval: no round artifacts under " + run_dir);
    return records;
}

}  // namespace lfi::cli
