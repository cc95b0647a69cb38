#pragma once

// Ferromagnetic Ising model on a free-boundary rectangular lattice with
// energy H(x) = -coupling * sum_edges x_i x_j - field * sum_i x_i and
// single-site Metropolis sampling over raster sweeps. The edge-interaction
// sum is the sufficient statistic for the coupling when the field is known.

#include "lfi/common.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace lfi::sim {

struct IsingLattice {
    int width = 8;
    int height = 8;
    int sites() const { return width * height; }
    int edges() const { return width * (height - 1) + height * (width - 1); }
};

// Spins are ±1 stored as doubles, row-major over the lattice.
double ising_energy(const Vec& spins, const IsingLattice& lat, double coupling, double field);
double ising_pair_sum(const Vec& spins, const IsingLattice& lat);
double ising_spin_sum(const Vec& spins);

class IsingChain {
  public:
    IsingChain(const IsingLattice& lat, double coupling, double field, Rng rng);

    void sweep();
    void run_sweeps(int n) {
        for (int i = 0; i < n; ++i) sweep();
    }

    Vec state() const;
    double pair_sum() const;
    const IsingLattice& lattice() const { return lat_; }

  private:
    IsingLattice lat_;
    std::vector<signed char> spins_;
    std::vector<std::array<int, 5>> neighbors_;  // [count, up to 4 indices]
    double accept_[2][9];                        // [spin<0 ? 0 : 1][neighbor_sum + 4]
    Rng rng_;
};

struct IsingSampleConfig {
    IsingLattice lattice;
    int burn_in_sweeps = 2000;
};

Vec ising_sample(double coupling, double field, std::uint64_t seed,
                 const IsingSampleConfig& cfg = {});

}  // namespace lfi::sim
