#pragma once

#include <cstdint>

#include "mkg/state.hpp"

namespace mkg {

struct DataSpec {
    std::uint64_t seed = 1;
    int kmin = 0;       // dyadic band 2^kmin <= |xi| <= 2^kmax
    int kmax = 2;
    double eps = 0.05;  // target energy norm (H^1-dot x L^2 of all components)
    bool with_field = true;
    bool operator==(const DataSpec&) const = default;
};

// Energy norm (||grad phi||^2 + ||dtphi||^2 + ||grad A||^2 + ||dtA||^2)^{1/2}.
double energy_norm(const GaugeState& s);

// Random band-limited, charge-neutral Coulomb data. Gaussian spectral
// coefficients with amplitude |xi|^{-2} (|xi|^{-1} for time derivatives).
GaugeState generate_data(const GridSpec& g, const DataSpec& spec);

// Random complex space-time trace on |n_i| <= band, |m| <= tband (lattice
// units), keeping only modes with xi != 0 at modulation >= eta.
SpacetimeField guarded_trace(const GridSpec& g, std::uint64_t seed, int band, int tband, double eta);

// Shift dtphi by i c phi so that the total charge vanishes (A0 re-solved).
void neutralize_charge(SpatialField& phi, SpatialField& dtphi);

}  // namespace mkg
