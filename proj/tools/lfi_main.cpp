// Command-line driver: run experiments, re-evaluate stored runs, emit plots
// and summary tables. All logic lives in the library; this file only maps
// verbs and flags onto it.

#include "lfi/cli/artifacts.hpp"
#include "lfi/cli/config.hpp"
#include "lfi/cli/experiment.hpp"
#include "lfi/cli/plots.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace {

using namespace lfi;

int verb_run(const std::string& config_path, const cli::KeyValues& overrides) {
    cli::ExperimentConfig cfg = config_path.empty()
                                    ? cli::resolve_config({}, overrides)
                                    : cli::parse_config(config_path, overrides);
    std::cout << "config:\n" << cli::serialize_config(cfg) << std::flush;
    return cli::run_experiment(cfg, std::cout).exit_status;
}

int verb_eval(const std::vector<std::string>& run_dirs) {
    int status = 0;
    for (const std::string& dir : run_dirs) {
        const std::vector<eval::RunRecord> fresh = cli::eval_run_dir(dir, std::cout);
        const std::vector<eval::RunRecord> stored =
            eval::parse_results_csv(cli::read_file(dir + "/results.csv"));
        require(fresh.size() == stored.size(), "eval: round count mismatch in " + dir);
        bool match = true;
        for (std::size_t i = 0; i < fresh.size(); ++i)
            if (format_double(fresh[i].jsd) != format_double(stored[i].jsd)) match = false;
        std::cout << dir << ": " << (match ? "jsd values reproduced" : "JSD MISMATCH") << "\n";
        if (!match) status = 1;
    }
    return status;
}

std::vector<eval::RunRecord> collect_records(const std::vector<std::string>& run_dirs) {
    std::vector<eval::RunRecord> records;
    for (const std::string& dir : run_dirs) {
        std::vector<eval::RunRecord> part;
        try {
            part = eval::parse_results_csv(cli::read_file(dir + "/results.csv"));
        } catch (const ContractViolation& e) {
            throw ContractViolation(
                std::string(e.what()) +
                " (expected schema: model,method,run_seed,round,sims_cumulative,jsd,wall_time_s)");
        }
        records.insert(records.end(), part.begin(), part.end());
    }
    require(!records.empty(), "no result rows found");
    return records;
}

int verb_plot(const std::vector<std::string>& run_dirs, const std::string& out_dir,
              const std::string& scatter_path) {
    cli::ensure_dir(out_dir);
    if (!run_dirs.empty()) {
        const std::vector<eval::RunRecord> records = collect_records(run_dirs);
        std::set<std::string> models;
        for (const eval::RunRecord& r : records) models.insert(r.model);
        for (const std::string& model : models) {
            const std::string svg =
                cli::line_chart_svg(cli::jsd_series(records, model), model,
                                    "cumulative simulations", "JSD to true posterior");
            const std::string path = out_dir + "/" + model + "-jsd.svg";
            cli::write_file_atomic(path, svg);
            std::cout << "wrote " << path << "\n";
        }
    }
    if (!scatter_path.empty()) {
        const Mat points = cli::parse_matrix_csv(cli::read_file(scatter_path));
        const std::string svg = cli::scatter_svg(points, "statistic sufficiency",
                                                 "known sufficient statistic",
                                                 "learned statistic");
        const std::string path = out_dir + "/scatter.svg";
        cli::write_file_atomic(path, svg);
        std::cout << "wrote " << path << "\n";
    }
    require(!run_dirs.empty() || !scatter_path.empty(), "plot: nothing to plot");
    return 0;
}

int verb_table(const std::vector<std::string>& run_dirs, const std::string& aggregate_path,
               const std::string& final_path) {
    const std::vector<eval::RunRecord> records = collect_records(run_dirs);
    const std::vector<eval::CellSummary> cells = eval::aggregate_runs(records);
    std::cout << eval::final_table_text(cells);
    if (!aggregate_path.empty()) {
        cli::write_file_atomic(aggregate_path, eval::aggregate_csv(cells));
        std::cout << "wrote " << aggregate_path << "\n";
    }
    if (!final_path.empty()) {
        cli::write_file_atomic(final_path, eval::final_table_csv(cells));
        std::cout << "wrote " << final_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"likelihood-free inference with learned summary statistics"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run an experiment from a config and/or flags");
    std::string config_path, model, methods, seeds, estimator, out, rounds, n, top_m;
    std::vector<std::string> sets;
    run->add_option("--config", config_path, "key = value config file");
    run->add_option("--model", model, "ising | gaussian_copula | ou");
    run->add_option("--method", methods, "comma list of methods");
    run->add_option("--rounds", rounds, "rounds per run");
    run->add_option("--n", n, "simulations per round");
    run->add_option("--top-m", top_m, "SMC acceptance count");
    run->add_option("--seed", seeds, "comma list of master seeds");
    run->add_option("--estimator", estimator, "jsd | dc");
    run->add_option("--out", out, "output root directory");
    run->add_option("--set", sets, "extra key=value override (repeatable)");

    // eval
    auto* ev = app.add_subcommand("eval", "recompute JSD from stored artifacts");
    std::vector<std::string> eval_dirs;
    ev->add_option("run_dirs", eval_dirs, "run directories")->required();

    // plot
    auto* plot = app.add_subcommand("plot", "emit SVG charts from run results");
    std::vector<std::string> plot_dirs;
    std::string plot_out = "plots", scatter_path;
    plot->add_option("run_dirs", plot_dirs, "run directories");
    plot->add_option("--out", plot_out, "directory for the SVG files");
    plot->add_option("--scatter", scatter_path, "n x 2 scatter CSV (s_star, s_learned)");

    // table
    auto* table = app.add_subcommand("table", "aggregate run results into the summary table");
    std::vector<std::string> table_dirs;
    std::string aggregate_path, final_path;
    table->add_option("run_dirs", table_dirs, "run directories")->required();
    table->add_option("--aggregate-csv", aggregate_path, "write per-round aggregate CSV here");
    table->add_option("--final-csv", final_path, "write final-round table CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            cli::KeyValues overrides;
            auto set_if = [&](const char* key, const std::string& value) {
                if (!value.empty()) overrides[key] = value;
            };
            set_if("model", model);
            set_if("methods", methods);
            set_if("rounds", rounds);
            set_if("n", n);
            set_if("top_m", top_m);
            set_if("seeds", seeds);
            set_if("estimator", estimator);
            set_if("out", out);
            for (const std::string& kv : sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw lfi::ConfigError("--set expects key=value, got: " + kv);
                overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            return verb_run(config_path, overrides);
        }
        if (ev->parsed()) return verb_eval(eval_dirs);
        if (plot->parsed()) return verb_plot(plot_dirs, plot_out, scatter_path);
        if (table->parsed()) return verb_table(table_dirs, aggregate_path, final_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
