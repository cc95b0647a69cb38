#pragma once

// Experiment configuration: a flat key=value file plus command-line
// overrides (overrides win). Unknown keys are rejected so typos fail loudly;
// serialization emits every key in a fixed order so a parse/serialize cycle
// is stable.

#include "lfi/common.hpp"
#include "lfi/infer/rounds.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lfi::cli {

struct ExperimentConfig {
    std::string model = "ou";  // ising | gaussian_copula | ou
    std::vector<infer::MethodKind> methods = {infer::MethodKind::SnlPlus};
    int rounds = 10;
    int n_per_round = 1000;
    int top_m = 200;
    mi::MiEstimator estimator = mi::MiEstimator::Jsd;
    std::vector<std::uint64_t> seeds = {1};
    int stat_dim = 0;  // 0 = auto: twice the parameter dimension
    std::string out_dir;                    // empty -> $LFI_OUT or "out"
    std::string cache_dir = ".lfi-cache";   // ground-truth tables
    bool evaluate = true;                   // score rounds against the truth
    bool warm_start = false;
    int posterior_samples = 500;

    // statistic training
    int m_perm = 400;
    std::vector<int> stat_hidden = {100, 100};
    int stat_batch = 200;
    double stat_lr = 1e-4;
    int stat_patience = 100;
    int stat_max_epochs = 2000;

    // synthetic-likelihood flow training
    int maf_flows = 5;
    int maf_hidden = 50;
    int maf_batch = 500;
    double maf_lr = 5e-4;
    int maf_patience = 100;
    int maf_max_epochs = 2000;
};

using KeyValues = std::map<std::string, std::string>;

// "key = value" lines, '#' comments, blank lines ignored; duplicate keys are
// an error.
KeyValues parse_key_value_text(const std::string& text);

// Applies file values then overrides onto the defaults; every key validated.
ExperimentConfig resolve_config(const KeyValues& file_kv, const KeyValues& overrides = {});
ExperimentConfig parse_config(const std::string& path, const KeyValues& overrides = {});

KeyValues config_to_kv(const ExperimentConfig& cfg);
std::string serialize_config(const ExperimentConfig& cfg);

// Accepts hyphen or underscore spellings; returns the canonical model name
// or throws listing the valid ones.
std::string canonical_model_name(const std::string& name);

// cfg.out_dir, else $LFI_OUT, else "out".
std::string resolved_out_dir(const ExperimentConfig& cfg);

// The statistic dimension a run on this model will use (resolves "auto").
int resolved_stat_dim(const ExperimentConfig& cfg, const sim::ModelSpec& spec);

// Per-run seed split: run_seed = mix(master_seed, 1 + method index). The
// round loop derives all further streams from it.
std::uint64_t derive_run_seed(std::uint64_t master_seed, infer::MethodKind method);
inline constexpr const char* seed_scheme_description =
    "run_seed = mix_seed(seed, 1 + method_index); per-round streams are "
    "mix_seed(run_seed, stream_tag, round, draw)";

infer::MethodConfig method_config(const ExperimentConfig& cfg, infer::MethodKind method,
                                  std::uint64_t master_seed);

}  // namespace lfi::cli
