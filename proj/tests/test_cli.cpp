#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lfi/cli/artifacts.hpp"
#include "lfi/cli/config.hpp"
#include "lfi/cli/experiment.hpp"
#include "lfi/cli/plots.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace lfi;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
    const std::string path = (fs::temp_directory_path() / ("lfi-test-" + tag)).string();
    fs::remove_all(path);
    fs::create_directories(path);
    return path;
}

// Small, fast experiment: expert statistic so no statistic net is trained,
// and a tiny flow so the density fit converges in well under a second.
cli::ExperimentConfig tiny_ou_config(const std::string& root) {
    cli::ExperimentConfig cfg;
    cfg.model = "ou";
    cfg.methods = {infer::MethodKind::SnlExpert};
    cfg.rounds = 2;
    cfg.n_per_round = 150;
    cfg.seeds = {1};
    cfg.out_dir = root + "/out";
    cfg.cache_dir = root + "/cache";
    cfg.posterior_samples = 200;
    cfg.maf_flows = 3;
    cfg.maf_hidden = 16;
    cfg.maf_patience = 10;
    cfg.maf_max_epochs = 60;
    return cfg;
}

}  // namespace

TEST_CASE("key=value text: comments and blanks skipped, duplicates rejected") {
    const cli::KeyValues kv = cli::parse_key_value_text(
        "# experiment\n"
        "model = ou\n"
        "\n"
        "rounds=3   # trailing comment\n"
        "  seeds = 1,2 \n");
    CHECK(kv.size() == 3);
    CHECK(kv.at("model") == "ou");
    CHECK(kv.at("rounds") == "3");
    CHECK(kv.at("seeds") == "1,2");

    CHECK_THROWS_AS(cli::parse_key_value_text("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(cli::parse_key_value_text("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(cli::parse_key_value_text("= 3\n"), ConfigError);
}

TEST_CASE("resolve_config: overrides win over file values") {
    cli::KeyValues file_kv = {{"model", "ising"}, {"rounds", "7"}, {"n", "300"}};
    cli::KeyValues overrides = {{"rounds", "4"}, {"estimator", "dc"}};
    const cli::ExperimentConfig cfg = cli::resolve_config(file_kv, overrides);
    CHECK(cfg.model == "ising");
    CHECK(cfg.rounds == 4);
    CHECK(cfg.n_per_round == 300);
    CHECK(cfg.estimator == mi::MiEstimator::Dc);
    CHECK(cfg.top_m == 200);  // untouched default
}

TEST_CASE("resolve_config: unknown keys and malformed values name the field") {
    CHECK_THROWS_WITH_AS(cli::resolve_config({{"bogus", "1"}}, {}),
                         doctest::Contains("unknown config key: bogus"), ConfigError);
    CHECK_THROWS_WITH_AS(cli::resolve_config({{"rounds", "three"}}, {}),
                         doctest::Contains("rounds"), ConfigError);
    CHECK_THROWS_WITH_AS(cli::resolve_config({{"rounds", "0"}}, {}),
                         doctest::Contains("rounds"), ConfigError);
    CHECK_THROWS_WITH_AS(cli::resolve_config({{"stat_lr", "fast"}}, {}),
                         doctest::Contains("stat_lr"), ConfigError);
    CHECK_THROWS_WITH_AS(cli::resolve_config({{"seeds", ""}}, {}), doctest::Contains("seeds"),
                         ConfigError);
}

TEST_CASE("resolve_config: unknown method lists the valid ones") {
    try {
        cli::resolve_config({{"methods", "snl+,snpe"}}, {});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("snpe") != std::string::npos);
        for (infer::MethodKind m : infer::all_methods())
            CHECK(msg.find(infer::method_name(m)) != std::string::npos);
    }
}

TEST_CASE("config serialization round-trips through the parser") {
    cli::ExperimentConfig cfg;
    cfg.model = "gaussian_copula";
    cfg.methods = {infer::MethodKind::SmcAbcPlus, infer::MethodKind::Snl};
    cfg.rounds = 5;
    cfg.seeds = {3, 17, 2};
    cfg.estimator = mi::MiEstimator::Dc;
    cfg.stat_hidden = {32, 16};
    cfg.stat_lr = 2.5e-4;
    cfg.warm_start = true;
    cfg.out_dir = "/tmp/somewhere";

    const std::string text = cli::serialize_config(cfg);
    const cli::ExperimentConfig back = cli::resolve_config(cli::parse_key_value_text(text));
    CHECK(cli::serialize_config(back) == text);
    CHECK(back.methods == cfg.methods);
    CHECK(back.seeds == cfg.seeds);
    CHECK(back.stat_hidden == cfg.stat_hidden);
    CHECK(back.stat_lr == cfg.stat_lr);
    CHECK(back.warm_start == cfg.warm_start);
}

TEST_CASE("canonical_model_name accepts hyphen spellings and rejects unknowns") {
    CHECK(cli::canonical_model_name("gaussian-copula") == "gaussian_copula");
    CHECK(cli::canonical_model_name("gaussian_copula") == "gaussian_copula");
    CHECK(cli::canonical_model_name("ising") == "ising");
    CHECK(cli::canonical_model_name("ou") == "ou");
    CHECK_THROWS_WITH_AS(cli::canonical_model_name("lorenz"), doctest::Contains("lorenz"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(cli::canonical_model_name("lorenz"), doctest::Contains("ising"),
                         ConfigError);
}

TEST_CASE("resolved_stat_dim: auto means twice the parameter dimension") {
    cli::ExperimentConfig cfg;
    const sim::ModelSpec ou = sim::make_model_spec("ou");
    CHECK(ou.param_dim == 2);
    CHECK(cli::resolved_stat_dim(cfg, ou) == 4);
    const sim::ModelSpec ising = sim::make_model_spec("ising");
    CHECK(cli::resolved_stat_dim(cfg, ising) == 2);
    cfg.stat_dim = 7;
    CHECK(cli::resolved_stat_dim(cfg, ou) == 7);
}

TEST_CASE("derive_run_seed separates methods and master seeds") {
    std::set<std::uint64_t> seen;
    for (infer::MethodKind m : infer::all_methods()) {
        seen.insert(cli::derive_run_seed(1, m));
        seen.insert(cli::derive_run_seed(2, m));
    }
    CHECK(seen.size() == 12);  // all distinct
    CHECK(cli::derive_run_seed(1, infer::MethodKind::SnlPlus) ==
          cli::derive_run_seed(1, infer::MethodKind::SnlPlus));
}

TEST_CASE("method_config carries the knobs and the derived seed") {
    cli::ExperimentConfig cfg;
    cfg.rounds = 4;
    cfg.n_per_round = 123;
    cfg.top_m = 45;
    cfg.warm_start = true;
    cfg.posterior_samples = 77;
    cfg.maf_flows = 2;
    cfg.stat_patience = 9;
    const infer::MethodConfig mc =
        cli::method_config(cfg, infer::MethodKind::SmcAbcPlus, 11);
    CHECK(mc.method == infer::MethodKind::SmcAbcPlus);
    CHECK(mc.rounds == 4);
    CHECK(mc.n_per_round == 123);
    CHECK(mc.top_m == 45);
    CHECK(mc.warm_start);
    CHECK(mc.posterior_sample_count == 77);
    CHECK(mc.maf.arch.n_flows == 2);
    CHECK(mc.infomax.train.patience == 9);
    CHECK(mc.seed == cli::derive_run_seed(11, infer::MethodKind::SmcAbcPlus));
}

TEST_CASE("matrix_csv round-trips values bitwise with column names") {
    Mat m(2, 3);
    m << 1.0, -0.125, 1e-17, 3.14159265358979, 2.0 / 3.0, -1234567.875;
    const std::vector<std::string> cols = {"a", "b", "c"};
    const std::string text = cli::matrix_csv(m, cols);
    std::vector<std::string> back_cols;
    const Mat back = cli::parse_matrix_csv(text, &back_cols);
    CHECK(back_cols == cols);
    REQUIRE(back.rows() == 2);
    REQUIRE(back.cols() == 3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) CHECK(back(i, j) == m(i, j));

    CHECK_THROWS_AS(cli::parse_matrix_csv("a,b\n1.0\n"), ContractViolation);
    CHECK_THROWS_AS(cli::parse_matrix_csv(""), ContractViolation);
}

TEST_CASE("write_file_atomic replaces content and manifest round-trips") {
    const std::string root = temp_dir("artifacts");
    const std::string path = root + "/file.txt";
    cli::write_file_atomic(path, "first");
    cli::write_file_atomic(path, "second");
    CHECK(cli::read_file(path) == "second");
    CHECK(!fs::exists(path + ".tmp"));

    cli::RunManifest m;
    m.model = "ou";
    m.method = "snl+";
    m.seed = 3;
    m.run_seed = 999;
    m.seed_scheme = cli::seed_scheme_description;
    m.build = cli::build_id();
    m.config = {{"rounds", "2"}};
    m.format_versions = {{"metrics", 1}};
    m.files = {{"round-1", {"data.csv", "metrics.json"}}};
    m.wall_time_s = 1.25;
    cli::write_manifest(root, m);
    const cli::RunManifest back = cli::read_manifest(root);
    CHECK(back.status == "incomplete");
    CHECK(back.model == "ou");
    CHECK(back.method == "snl+");
    CHECK(back.seed == 3);
    CHECK(back.run_seed == 999);
    CHECK(back.seed_scheme == m.seed_scheme);
    CHECK(back.build == m.build);
    CHECK(back.config.at("rounds") == "2");
    CHECK(back.format_versions.at("metrics") == 1);
    CHECK(back.files.at("round-1") == m.files.at("round-1"));
    CHECK(back.wall_time_s == 1.25);
}

TEST_CASE("run_experiment writes the full artifact tree and a complete manifest") {
    const std::string root = temp_dir("exp");
    const cli::ExperimentConfig cfg = tiny_ou_config(root);
    std::ostringstream log;
    const cli::ExperimentResult res = cli::run_experiment(cfg, log);
    CHECK(res.exit_status == 0);
    REQUIRE(res.run_dirs.size() == 1);
    CHECK(res.records.size() == 2);

    const std::string run_dir = res.run_dirs[0];
    CHECK(run_dir == cli::run_dir_for(cfg.out_dir, "ou", "snl-expert", 1));
    for (const char* name :
         {"manifest.json", "results.csv", "round-1/data.csv", "round-1/statistic.json",
          "round-1/density.json", "round-1/posterior_samples.csv", "round-1/metrics.json",
          "round-2/metrics.json"})
        CHECK(fs::exists(run_dir + "/" + name));

    const cli::RunManifest manifest = cli::read_manifest(run_dir);
    CHECK(manifest.status == "complete");
    CHECK(manifest.run_seed == cli::derive_run_seed(1, infer::MethodKind::SnlExpert));
    CHECK(manifest.config.at("model") == "ou");
    CHECK(manifest.wall_time_s > 0.0);

    // data.csv holds the round's simulations: theta columns then x columns.
    std::vector<std::string> cols;
    const Mat data = cli::parse_matrix_csv(cli::read_file(run_dir + "/round-1/data.csv"), &cols);
    const sim::ModelSpec spec = sim::make_model_spec("ou");
    CHECK(data.rows() == cfg.n_per_round);
    CHECK(data.cols() == spec.param_dim + spec.data_dim);
    CHECK(cols.front() == "theta_0");
    CHECK(cols[static_cast<std::size_t>(spec.param_dim)] == "x_0");

    // results.csv agrees with the in-memory records.
    const std::vector<eval::RunRecord> stored =
        eval::parse_results_csv(cli::read_file(run_dir + "/results.csv"));
    REQUIRE(stored.size() == res.records.size());
    for (std::size_t i = 0; i < stored.size(); ++i) {
        CHECK(stored[i].jsd == res.records[i].jsd);
        CHECK(stored[i].run_seed == manifest.run_seed);
        CHECK(stored[i].sims_cumulative == res.records[i].sims_cumulative);
    }

    // metrics.json carries deterministic fields only.
    const nlohmann::json metrics =
        nlohmann::json::parse(cli::read_file(run_dir + "/round-2/metrics.json"));
    CHECK(metrics.at("round") == 2);
    CHECK(metrics.at("sim_count") == 300);
    CHECK(metrics.at("seed") == 1);
    CHECK(!metrics.contains("wall_time_s"));
}

TEST_CASE("rerunning the same config reproduces metrics files byte for byte") {
    const std::string root = temp_dir("rerun");
    cli::ExperimentConfig cfg = tiny_ou_config(root);
    std::ostringstream log;

    cfg.out_dir = root + "/out-a";
    REQUIRE(cli::run_experiment(cfg, log).exit_status == 0);
    cfg.out_dir = root + "/out-b";
    REQUIRE(cli::run_experiment(cfg, log).exit_status == 0);

    for (int round = 1; round <= cfg.rounds; ++round) {
        const std::string rel = "/ou/snl-expert/seed-1/round-" + std::to_string(round);
        CHECK(cli::read_file(root + "/out-a" + rel + "/metrics.json") ==
              cli::read_file(root + "/out-b" + rel + "/metrics.json"));
        CHECK(cli::read_file(root + "/out-a" + rel + "/posterior_samples.csv") ==
              cli::read_file(root + "/out-b" + rel + "/posterior_samples.csv"));
        CHECK(cli::read_file(root + "/out-a" + rel + "/data.csv") ==
              cli::read_file(root + "/out-b" + rel + "/data.csv"));
    }
}

TEST_CASE("eval_run_dir reproduces the stored JSD from saved samples") {
    const std::string root = temp_dir("eval");
    const cli::ExperimentConfig cfg = tiny_ou_config(root);
    std::ostringstream log;
    const cli::ExperimentResult res = cli::run_experiment(cfg, log);
    REQUIRE(res.exit_status == 0);

    const std::vector<eval::RunRecord> fresh = cli::eval_run_dir(res.run_dirs[0], log);
    REQUIRE(fresh.size() == res.records.size());
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        CHECK(fresh[i].jsd == res.records[i].jsd);  // bitwise
        CHECK(fresh[i].sims_cumulative == res.records[i].sims_cumulative);
    }
}

TEST_CASE("aborted runs leave an incomplete manifest and a nonzero status") {
    const std::string root = temp_dir("abort");
    cli::ExperimentConfig cfg = tiny_ou_config(root);
    cfg.methods = {infer::MethodKind::SmcAbc};
    cfg.top_m = 160;  // > n_per_round of 150, rejected inside the run
    cfg.evaluate = false;
    std::ostringstream log;
    const cli::ExperimentResult res = cli::run_experiment(cfg, log);
    CHECK(res.exit_status == 1);
    CHECK(log.str().find("run failed") != std::string::npos);

    const std::string run_dir = cli::run_dir_for(cfg.out_dir, "ou", "smc-abc", 1);
    CHECK(cli::read_manifest(run_dir).status == "incomplete");
    CHECK_THROWS_WITH_AS(cli::eval_run_dir(run_dir, log), doctest::Contains("not complete"),
                         ContractViolation);
}

TEST_CASE("line_chart_svg draws every series and rejects empty input") {
    cli::Series a{"snl+", {100, 200, 300}, {0.4, 0.2, 0.1}};
    cli::Series b{"smc-abc+", {100, 200, 300}, {0.5, 0.3, 0.2}};
    const std::string svg = cli::line_chart_svg({a, b}, "ou", "sims", "jsd");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("snl+") != std::string::npos);
    CHECK(svg.find("smc-abc+") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("ou") != std::string::npos);

    CHECK_THROWS_AS(cli::line_chart_svg({}, "t", "x", "y"), ContractViolation);
    cli::Series empty{"n", {}, {}};
    CHECK_THROWS_AS(cli::line_chart_svg({empty}, "t", "x", "y"), ContractViolation);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cli::Series all_nan{"n", {1.0, 2.0}, {nan, nan}};
    CHECK_THROWS_AS(cli::line_chart_svg({all_nan}, "t", "x", "y"), ContractViolation);
}

TEST_CASE("jsd_series averages seeds per method at each budget") {
    std::vector<eval::RunRecord> records;
    records.push_back({"ou", "snl+", 10, 1, 100, 0.4, 0.0});
    records.push_back({"ou", "snl+", 10, 2, 200, 0.2, 0.0});
    records.push_back({"ou", "snl+", 20, 1, 100, 0.6, 0.0});
    records.push_back({"ou", "snl+", 20, 2, 200, 0.4, 0.0});
    records.push_back({"ou", "snl", 10, 1, 100, 0.7, 0.0});
    records.push_back({"ou", "snl", 10, 2, 200, 0.5, 0.0});
    records.push_back({"ising", "snl+", 10, 1, 100, 0.9, 0.0});  // other model, ignored

    const std::vector<cli::Series> series = cli::jsd_series(records, "ou");
    REQUIRE(series.size() == 2);
    CHECK(series[0].label == "snl+");  // canonical method order
    CHECK(series[1].label == "snl");
    REQUIRE(series[0].x.size() == 2);
    CHECK(series[0].x[0] == 100);
    CHECK(series[0].y[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(series[0].y[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(series[1].y[0] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("scatter_sorted orders by the first column with stable ties") {
    Mat pts(4, 2);
    pts << 3.0, 30.0, 1.0, 10.0, 2.0, 20.0, 1.0, 11.0;
    const Mat sorted = cli::scatter_sorted(pts);
    REQUIRE(sorted.rows() == 4);
    CHECK(sorted(0, 0) == 1.0);
    CHECK(sorted(0, 1) == 10.0);  // first of the tied pair keeps its place
    CHECK(sorted(1, 0) == 1.0);
    CHECK(sorted(1, 1) == 11.0);
    CHECK(sorted(2, 0) == 2.0);
    CHECK(sorted(3, 0) == 3.0);

    const std::string svg = cli::scatter_svg(pts, "s", "x", "y");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<circle") != std::string::npos);

    Mat bad(2, 3);
    bad.setZero();
    CHECK_THROWS_AS(cli::scatter_sorted(bad), ContractViolation);
}

TEST_CASE("resolved_out_dir falls back to the environment then to a default") {
    cli::ExperimentConfig cfg;
    cfg.out_dir = "explicit";
    CHECK(cli::resolved_out_dir(cfg) == "explicit");
    cfg.out_dir.clear();
    ::setenv("LFI_OUT", "/tmp/from-env", 1);
    CHECK(cli::resolved_out_dir(cfg) == "/tmp/from-env");
    ::unsetenv("LFI_OUT");
    CHECK(cli::resolved_out_dir(cfg) == "out");
}

TEST_CASE("parse_config reads a file and applies overrides on top") {
    const std::string root = temp_dir("cfgfile");
    const std::string path = root + "/exp.cfg";
    {
        std::ofstream f(path);
        f << "# tiny experiment\nmodel = gaussian-copula\nrounds = 3\nmethods = snl+,snl\n";
    }
    const cli::ExperimentConfig cfg = cli::parse_config(path, {{"rounds", "2"}});
    CHECK(cfg.model == "gaussian_copula");  // canonicalized
    CHECK(cfg.rounds == 2);                 // override wins
    REQUIRE(cfg.methods.size() == 2);
    CHECK(cfg.methods[0] == infer::MethodKind::SnlPlus);
    CHECK(cfg.methods[1] == infer::MethodKind::Snl);
    CHECK_THROWS_AS(cli::parse_config(root + "/missing.cfg", {}), ConfigError);
}
