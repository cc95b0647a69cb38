#include "lfi/sim/ou.hpp"

namespace lfi::sim {

Vec ou_simulate_with_noise(const Vec& theta, const Vec& noise) {
    require(theta.size() == 2, "ou_simulate: theta must have 2 coordinates");
    require(noise.size() == ou_path_length, "ou_simulate: need one noise draw per step");
    const double rate = theta[0];
    const double level = std::exp(theta[1]);
    Vec path(ou_path_length);
    double x = ou_x0;
    for (int t = 0; t < ou_path_length; ++t) {
        x += rate * (level - x) * ou_dt + 0.5 * noise[t];
        path[t] = x;
    }
    return path;
}

Vec ou_simulate(const Vec& theta, std::uint64_t seed) {
    Rng rng = make_rng(seed, stream::simulate);
    std::normal_distribution<double> gauss(0.0, std::sqrt(ou_dt));
    Vec noise(ou_path_length);
    for (int t = 0; t < ou_path_length; ++t) noise[t] = gauss(rng);
    return ou_simulate_with_noise(theta, noise);
}

double ou_log_likelihood(const Vec& path, const Vec& theta) {
    require(theta.size() == 2, "ou_log_likelihood: theta must have 2 coordinates");
    require(path.size() == ou_path_length, "ou_log_likelihood: wrong path length");
    const double rate = theta[0];
    const double level = std::exp(theta[1]);
    const double sd = ou_step_sd();
    double ll = 0.0;
    double prev = ou_x0;
    for (int t = 0; t < ou_path_length; ++t) {
        const double mean = prev + rate * (level - prev) * ou_dt;
        const double z = (path[t] - mean) / sd;
        ll += norm_logpdf(z) - std::log(sd);
        prev = path[t];
    }
    return ll;
}

Vec ou_expert_statistic(const Vec& path, bool* degenerate) {
    require(path.size() >= 5, "ou_expert_statistic: path too short");
    const auto n = static_cast<double>(path.size());
    const double mean = path.mean();
    Vec centered = path.array() - mean;
    const double ss = centered.squaredNorm();
    const double sd = std::sqrt(ss / (n - 1.0));

    Vec stat(5);
    stat[0] = mean;
    stat[1] = sd / std::sqrt(n);
    if (degenerate) *degenerate = false;
    if (ss <= 0.0) {
        stat[2] = stat[3] = stat[4] = 0.0;
        if (degenerate) *degenerate = true;
        return stat;
    }
    for (int lag = 1; lag <= 3; ++lag) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t + lag < path.size(); ++t) acc += centered[t] * centered[t + lag];
        stat[1 + lag] = acc / ss;
    }
    return stat;
}

}  // namespace lfi::sim
