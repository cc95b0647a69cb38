#pragma once

// The sequential inference loop shared by every method: draw parameters from
// the current proposal, simulate, grow the dataset, refit statistic and
// density, and produce the next posterior estimate. Methods differ only in
// which statistic they use (learned, identity on the raw data, or expert)
// and in how the density step turns the dataset into an estimate (SMC
// accept-and-refit versus synthetic likelihood).

#include "lfi/common.hpp"
#include "lfi/density/maf.hpp"
#include "lfi/eval/truth.hpp"
#include "lfi/infer/estimate.hpp"
#include "lfi/mi/infomax.hpp"
#include "lfi/sim/model_spec.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lfi::infer {

enum class MethodKind { SmcAbcPlus, SmcAbc, SmcAbcExpert, SnlPlus, Snl, SnlExpert };

const char* method_name(MethodKind m);
MethodKind method_from_name(const std::string& name);
// Methods listed in reporting order.
const std::vector<MethodKind>& all_methods();

bool method_is_smc(MethodKind m);
// Methods that retrain the learned statistic each round.
bool method_is_learned(MethodKind m);
bool method_is_expert(MethodKind m);

struct MethodConfig {
    MethodKind method = MethodKind::SmcAbcPlus;
    int rounds = 10;
    int n_per_round = 1000;
    int top_m = 200;  // SMC acceptance count per round
    std::uint64_t seed = 1;
    bool warm_start = false;  // statistic training restarts cold by default
    int posterior_sample_count = 500;

    mi::InfomaxConfig infomax;     // learned-statistic training knobs
    density::MafFitConfig maf;     // synthetic-likelihood training knobs
};

// Append-only record of every simulation made during a run. Rounds append
// blocks of n_per_round records; nothing is ever rewritten.
struct RoundDataset {
    Mat thetas;                   // (n * rounds_done) x param_dim
    Mat xs;                       // (n * rounds_done) x data_dim
    std::vector<int> round_of;    // 1-based round index per record
    int per_round = 0;
    int rounds_done = 0;

    int size() const { return static_cast<int>(thetas.rows()); }
    void append_round(const Mat& round_thetas, const Mat& round_xs);
};

struct RoundOutput {
    int round = 0;
    long long sims_cumulative = 0;
    double wall_time_s = 0.0;

    PosteriorEstimate estimate;  // the proposal for the next round
    Mat posterior_samples;       // draws from the estimate for evaluation
    double jsd = std::numeric_limits<double>::quiet_NaN();  // vs truth when given

    Mat round_thetas, round_xs;  // this round's dataset delta

    nlohmann::json statistic_checkpoint;
    nlohmann::json density_checkpoint;
    double statistic_objective = std::numeric_limits<double>::quiet_NaN();
    bool statistic_near_constant = false;
    bool degenerate_fit_fallback = false;  // SMC: top-m fit failed, Gaussian used
    bool density_fit_failed = false;       // SNL: flow diverged, proposal reused
    double proposal_acceptance = 1.0;      // rejection rate when this round sampled
};

struct RunResult {
    std::string model;
    std::string method;
    std::uint64_t seed = 0;
    std::vector<RoundOutput> rounds;
    RoundDataset dataset;
};

struct RunHooks {
    // Called after each completed round; use for artifact writing and logging.
    std::function<void(const RoundOutput&)> on_round;
};

// Runs cfg.rounds rounds of cfg.method against the observation. truth, when
// given, scores each round's posterior samples by grid JSD. Deterministic
// given (spec, obs, cfg).
RunResult run_inference(const sim::ModelSpec& spec, const sim::Observation& obs,
                        const MethodConfig& cfg, const eval::TruthPosterior* truth = nullptr,
                        const RunHooks& hooks = {});

// Named entry points; each checks cfg.method matches.
RunResult run_smc_abc_plus(const sim::ModelSpec& spec, const sim::Observation& obs,
                           const MethodConfig& cfg, const eval::TruthPosterior* truth = nullptr,
                           const RunHooks& hooks = {});
RunResult run_snl_plus(const sim::ModelSpec& spec, const sim::Observation& obs,
                       const MethodConfig& cfg, const eval::TruthPosterior* truth = nullptr,
                       const RunHooks& hooks = {});
RunResult run_baseline(const sim::ModelSpec& spec, const sim::Observation& obs,
                       const MethodConfig& cfg, const eval::TruthPosterior* truth = nullptr,
                       const RunHooks& hooks = {});

// Fixed-seed observation shared by every experiment on a model, so method
// comparisons condition on the same x_o.
inline constexpr std::uint64_t observation_fixture_seed = 20240601;
sim::Observation observation_fixture(const sim::ModelSpec& spec);

}  // namespace lfi::infer
