#pragma once

// Central-difference gradient verification against TrainableModel::eval_loss.
// Works for the stochastic losses too because the same noise_seed reproduces
// the same loss surface.

#include "lfi/nn/train.hpp"

#include <cstdint>
#include <span>

namespace lfi::nn {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_block;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// h is the central-difference step. Relative error uses an absolute floor so
// parameters with (genuinely) zero gradient do not divide by zero. Every
// parameter is probed; keep the model tiny.
GradCheckResult grad_check(TrainableModel& model, std::span<const int> rows,
                           std::uint64_t noise_seed, double h = 1e-5,
                           double denom_floor = 1e-6);

}  // namespace lfi::nn
