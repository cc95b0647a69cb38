#pragma once

// Experiment orchestration: expands a config into (method, seed) runs, wires
// the inference loop's per-round hook to artifact writing, and finalizes the
// manifest. Also the `eval` verb's recomputation path, which rebuilds every
// reported JSD from the stored posterior samples and manifest seeds.

#include "lfi/cli/artifacts.hpp"
#include "lfi/cli/config.hpp"
#include "lfi/eval/metrics.hpp"
#include "lfi/eval/truth.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lfi::cli {

// Seed of the ground-truth reference construction; fixed so truth (and the
// JSD numbers against it) is identical across runs and reruns.
inline constexpr std::uint64_t truth_reference_seed = 1000003;

struct ExperimentResult {
    int exit_status = 0;
    std::vector<eval::RunRecord> records;
    std::vector<std::string> run_dirs;
};

std::string run_dir_for(const std::string& out_dir, const std::string& model,
                        const std::string& method, std::uint64_t seed);

// Runs every (method, seed) cell; artifacts land under
// out/<model>/<method>/seed-<s>/{manifest.json, results.csv, round-<j>/...}.
// A failed cell is logged with its context and turns the exit status nonzero;
// remaining cells still run.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Rebuilds the truth and rescoring seeds from the manifest and recomputes the
// per-round JSD from the stored posterior samples. Returns records matching
// the run's results.csv (timings excluded from the comparison).
std::vector<eval::RunRecord> eval_run_dir(const std::string& run_dir, std::ostream& log);

// Truth construction shared by run and eval (Ising goes through the cached
// ABC table under cache_dir).
eval::TruthPosterior build_truth(const sim::ModelSpec& spec, const sim::Observation& obs,
                                 const std::string& cache_dir);

}  // namespace lfi::cli
