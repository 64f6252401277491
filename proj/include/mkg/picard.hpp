#pragma once

#include <map>
#include <string>
#include <vector>

#include "mkg/field.hpp"
#include "mkg/state.hpp"
#include "mkg/wave.hpp"

namespace mkg {

// One Picard iterate sampled at t_m = m T / Nt on the grid's time window.
struct Iterate {
    VectorSpacetimeField A, dtA;
    SpacetimeField A0, dtA0;
    SpacetimeField phi, dtphi;

    const GridSpec& grid() const { return phi.grid; }
    GaugeState slice(int m) const;
    void set_slice(int m, const GaugeState& s);
};

struct PicardOptions {
    Scheme scheme = Scheme::trigonometric;
    int substeps = 1;       // solver steps per stored time sample
    int max_iterates = 12;
    int min_iterates = 4;   // keep iterating below tol until this many exist
    double tol = 1e-8;      // stop once the energy-type difference drops below
    bool keep_iterates = false;
};

struct IterationDiff {
    double energy = 0;      // sup_t of the energy norm of the difference
    double strichartz = 0;  // l^2 over k of 2^{-5k/6} ||P_k grad_{t,x} d||_{L^2 L^6}
    double xsb = 0;         // X^{1,1/2}_infty of the difference, Hann taper
};

struct IterationTrace {
    std::vector<Iterate> iterates;    // all iterates when keep_iterates, else the last one
    std::vector<IterationDiff> diffs; // diffs[i] compares iterates i+1 and i+2 (1-based)
    // ratios[i] = diffs[i+1] / diffs[i] for the energy norm; NaN where the
    // denominator is at most 1e-14.
    std::vector<double> ratios;
    int count = 0;                    // iterates computed
};

Iterate init_iterate(const GaugeState& data);
Iterate picard_step(const Iterate& prev, const GaugeState& data, const PicardOptions& opt = {});
IterationDiff iterate_difference(const Iterate& a, const Iterate& b);
IterationTrace picard_iterate(const GaugeState& data, const PicardOptions& opt = {});

// A^{nonlin} = A - A^{free}, vanishing at t = 0.
VectorSpacetimeField nonlinear_part(const Iterate& it, const GaugeState& data);

struct DecayFit {
    double ratio = 0;       // exp(slope) of log(diff) against m
    double r_squared = 0;
    int points = 0;
    bool monotone = true;   // non-monotone diffs are flagged, not rejected
};

// Log-linear fit of diffs above `floor`.
DecayFit fit_decay(const std::vector<double>& diffs, double floor = 1e-14);

struct ConvergenceRun {
    double eps = 0;
    IterationTrace trace;
};

struct ConvergenceReport {
    std::vector<double> eps;
    std::vector<DecayFit> fits;  // energy-norm fit per amplitude
    // fits[i].ratio / fits[0].ratio against eps[i] / eps[0].
    std::vector<double> ratio_scaling;
};

ConvergenceReport convergence_report(const std::vector<ConvergenceRun>& runs);

// c_k = max_k' 2^{-delta |k-k'|} ||P_k' (A_x[0], phi[0])||_{H^1 x L^2} over the
// resolvable range; H^1 here is the energy pairing of (A, dtA) and (phi, dtphi).
std::map<int, double> envelope_diagnostic(const GaugeState& s, double delta = 0.1);

}  // namespace mkg
