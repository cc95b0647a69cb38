#include "lfi/nn/gradcheck.hpp"

#include <cmath>

namespace lfi::nn {

GradCheckResult grad_check(TrainableModel& model, std::span<const int> rows,
                           std::uint64_t noise_seed, double h, double denom_floor) {
    auto blocks = model.param_blocks();
    for (auto& b : blocks) std::fill(b.grad.begin(), b.grad.end(), 0.0);
    model.loss_grad(rows, noise_seed);

    GradCheckResult res;
    for (auto& b : blocks) {
        for (std::size_t i = 0; i < b.value.size(); ++i) {
            const double saved = b.value[i];
            b.value[i] = saved + h;
            const double up = model.eval_loss(rows, noise_seed);
            b.value[i] = saved - h;
            const double down = model.eval_loss(rows, noise_seed);
            b.value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = b.grad[i];
            const double err = std::abs(analytic - numeric) /
                               std::max(std::max(std::abs(analytic), std::abs(numeric)), denom_floor);
            if (err > res.max_rel_err) {
                res.max_rel_err = err;
                res.worst_block = b.name;
                res.worst_index = i;
                res.analytic = analytic;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

}  // namespace lfi::nn
