#include "lfi/sim/ising.hpp"

namespace lfi::sim {

double ising_energy(const Vec& spins, const IsingLattice& lat, double coupling, double field) {
    require(spins.size() == lat.sites(), "ising_energy: spin count does not match lattice");
    double pairs = 0.0;
    for (int r = 0; r < lat.height; ++r) {
        for (int c = 0; c < lat.width; ++c) {
            const int i = r * lat.width + c;
            if (c + 1 < lat.width) pairs += spins[i] * spins[i + 1];
            if (r + 1 < lat.height) pairs += spins[i] * spins[i + lat.width];
        }
    }
    return -coupling * pairs - field * spins.sum();
}

double ising_pair_sum(const Vec& spins, const IsingLattice& lat) {
    require(spins.size() == lat.sites(), "ising_pair_sum: spin count does not match lattice");
    double pairs = 0.0;
    for (int r = 0; r < lat.height; ++r) {
        for (int c = 0; c < lat.width; ++c) {
            const int i = r * lat.width + c;
            if (c + 1 < lat.width) pairs += spins[i] * spins[i + 1];
            if (r + 1 < lat.height) pairs += spins[i] * spins[i + lat.width];
        }
    }
    return pairs;
}

double ising_spin_sum(const Vec& spins) { return spins.sum(); }

namespace {

inline double unit_uniform(Rng& rng) {
    // 53-bit mantissa draw; keeps the sampler independent of library
    // distribution internals.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

IsingChain::IsingChain(const IsingLattice& lat, double coupling, double field, Rng rng)
    : lat_(lat), rng_(rng) {
    require(lat.width >= 2 && lat.height >= 2, "IsingChain: lattice must be at least 2x2");
    const int n = lat.sites();
    spins_.resize(n);
    for (int i = 0; i < n; ++i) spins_[i] = (rng_() & 1) ? 1 : -1;

    neighbors_.assign(n, {});
    for (int r = 0; r < lat.height; ++r) {
        for (int c = 0; c < lat.width; ++c) {
            const int i = r * lat.width + c;
            auto& nb = neighbors_[i];
            int k = 0;
            if (c > 0) nb[++k] = i - 1;
            if (c + 1 < lat.width) nb[++k] = i + 1;
            if (r > 0) nb[++k] = i - lat.width;
            if (r + 1 < lat.height) nb[++k] = i + lat.width;
            nb[0] = k;
        }
    }

    // Flipping spin s with neighbor sum ns changes the energy by
    // dH = 2 s (coupling * ns + field); acceptance is min(1, exp(-dH)).
    for (int si = 0; si < 2; ++si) {
        const double s = si == 0 ? -1.0 : 1.0;
        for (int ns = -4; ns <= 4; ++ns) {
            const double dh = 2.0 * s * (coupling * ns + field);
            accept_[si][ns + 4] = std::exp(-dh);  // values >= 1 mean always accept
        }
    }
}

void IsingChain::sweep() {
    const int n = lat_.sites();
    for (int i = 0; i < n; ++i) {
        const auto& nb = neighbors_[i];
        int ns = 0;
        for (int k = 1; k <= nb[0]; ++k) ns += spins_[nb[k]];
        const double a = accept_[spins_[i] > 0 ? 1 : 0][ns + 4];
        if (a >= 1.0 || unit_uniform(rng_) < a) spins_[i] = -spins_[i];
    }
}

Vec IsingChain::state() const {
    Vec v(lat_.sites());
    for (int i = 0; i < lat_.sites(); ++i) v[i] = spins_[i];
    return v;
}

double IsingChain::pair_sum() const { return ising_pair_sum(state(), lat_); }

Vec ising_sample(double coupling, double field, std::uint64_t seed, const IsingSampleConfig& cfg) {
    IsingChain chain(cfg.lattice, coupling, field, Rng(mix_seed(seed, stream::simulate)));
    chain.run_sweeps(cfg.burn_in_sweeps);
    return chain.state();
}

}  // namespace lfi::sim
