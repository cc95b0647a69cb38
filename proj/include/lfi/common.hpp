#pragma once

// Shared basics: matrix aliases, error types, seeding, and the handful of
// scalar numeric routines everything else leans on.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfi {

// Rows are samples, columns are features, storage row-major so a sample is
// contiguous in memory.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

using Rng = std::mt19937_64;

// Broken caller contract: bad shapes, out-of-range arguments, misuse.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Bad user-facing configuration (unknown keys, invalid values).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure: non-finite values, degenerate batches,
// collapsed acceptance rates.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

// --- seeding ------------------------------------------------------------
//
// All randomness is derived from a master seed through splitmix64 mixing of
// (seed, stream tags...). Per-draw streams make results independent of
// batching and iteration order.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t head, Rest... rest) {
    return mix_seed(splitmix64(seed ^ splitmix64(head)), rest...);
}

template <typename... Tags>
Rng make_rng(std::uint64_t seed, Tags... tags) {
    return Rng(mix_seed(seed, static_cast<std::uint64_t>(tags)...));
}

// Stream tags, so distinct purposes never share a generator.
namespace stream {
inline constexpr std::uint64_t simulate = 1;
inline constexpr std::uint64_t statistic = 2;
inline constexpr std::uint64_t density = 3;
inline constexpr std::uint64_t proposal = 4;
inline constexpr std::uint64_t normconst = 5;
inline constexpr std::uint64_t evaluate = 6;
inline constexpr std::uint64_t observation = 7;
inline constexpr std::uint64_t init = 8;
inline constexpr std::uint64_t shuffle = 9;
inline constexpr std::uint64_t validation = 10;
}  // namespace stream

// --- scalar numerics ----------------------------------------------------

inline constexpr double pi_v = 3.14159265358979323846;

// log(1 + e^t) without overflow on either tail.
inline double softplus(double t) {
    if (t > 35.0) return t + std::log1p(std::exp(-t));
    if (t < -35.0) return std::exp(t);
    return std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline double norm_logpdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * pi_v); }

inline double norm_pdf(double z) { return std::exp(norm_logpdf(z)); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse standard normal CDF: rational initial guess refined by two Halley
// steps against erfc, accurate to ~1e-15 over (0,1).
double norm_quantile(double p);

double log_sum_exp(std::span<const double> v);

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline Mat gather_rows(const Mat& m, std::span<const int> rows) {
    Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

// Greatest-common denominator of the test suites: relative error with an
// absolute floor so near-zero references do not blow up the ratio.
inline double rel_err(double got, double want, double floor_ = 1e-12) {
    return std::abs(got - want) / std::max(std::abs(want), floor_);
}

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace lfi
