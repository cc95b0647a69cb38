#include "lfi/density/rejection.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace lfi::density {

RejectionResult rejection_sample(const std::function<double(const Vec&)>& target_log_density,
                                 const RejectionProposal& proposal, int n, std::uint64_t seed,
                                 const RejectionConfig& cfg) {
    require(n >= 1, "rejection_sample: need n >= 1");
    require(static_cast<bool>(proposal.sample) && static_cast<bool>(proposal.log_density),
            "rejection_sample: proposal incomplete");
    Rng rng = make_rng(seed, stream::proposal);

    RejectionResult res;
    if (cfg.log_envelope) {
        res.log_envelope = *cfg.log_envelope;
    } else {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < cfg.envelope_probes; ++i) {
            const Vec theta = proposal.sample(rng);
            const double ratio = target_log_density(theta) - proposal.log_density(theta);
            if (std::isnan(ratio)) continue;
            best = std::max(best, ratio);
        }
        require(std::isfinite(best),
                "rejection_sample: envelope estimation saw no finite log-ratio");
        res.log_envelope = best + cfg.envelope_margin;
    }

    std::vector<Vec> accepted;
    accepted.reserve(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(accepted.size()) < n) {
        const Vec theta = proposal.sample(rng);
        ++res.proposals;
        const double log_ratio =
            target_log_density(theta) - proposal.log_density(theta) - res.log_envelope;
        if (log_ratio > 0.0) ++res.violations;
        if (std::log(unit(rng)) < log_ratio) accepted.push_back(theta);

        if (res.proposals % cfg.rate_check_interval == 0) {
            const double rate = static_cast<double>(accepted.size()) / res.proposals;
            if (rate < cfg.min_rate)
                throw NumericalError(
                    "rejection_sample: acceptance rate " + format_double(rate) + " after " +
                    std::to_string(res.proposals) + " proposals (need " +
                    std::to_string(n - static_cast<int>(accepted.size())) + " more draws)");
        }
    }

    res.samples = Mat(n, accepted.front().size());
    for (int i = 0; i < n; ++i) res.samples.row(i) = accepted[static_cast<std::size_t>(i)];
    res.acceptance_rate = static_cast<double>(n) / static_cast<double>(res.proposals);
    return res;
}

}  // namespace lfi::density
