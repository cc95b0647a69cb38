#pragma once

// Plain rejection sampling against an unnormalized log target. When no
// envelope constant is supplied it is estimated as the max log-ratio over a
// batch of proposal probes plus a ln 2 safety margin; ratio excursions above
// the envelope are counted rather than silently clipped.

#include "lfi/common.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace lfi::density {

struct RejectionProposal {
    std::function<Vec(Rng&)> sample;
    std::function<double(const Vec&)> log_density;
};

struct RejectionConfig {
    std::optional<double> log_envelope;  // log M; estimated when absent
    int envelope_probes = 10000;
    double envelope_margin = 0.6931471805599453;  // ln 2
    double min_rate = 1e-4;
    long rate_check_interval = 20000;
};

struct RejectionResult {
    Mat samples;             // n rows
    double acceptance_rate = 0.0;
    long proposals = 0;
    long violations = 0;     // draws with log target - log proposal > log M
    double log_envelope = 0.0;
};

RejectionResult rejection_sample(const std::function<double(const Vec&)>& target_log_density,
                                 const RejectionProposal& proposal, int n, std::uint64_t seed,
                                 const RejectionConfig& cfg = {});

}  // namespace lfi::density
