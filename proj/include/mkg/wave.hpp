#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mkg/field.hpp"
#include "mkg/state.hpp"

namespace mkg {

enum class Scheme { spectral_exact, leapfrog, trigonometric };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

// phi(t) = cos(t|D|) g + |D|^{-1} sin(t|D|) h and its time derivative. The zero
// mode evolves linearly (g + t h).
std::pair<SpatialField, SpatialField> free_propagate(const SpatialField& g, const SpatialField& h, double t);
void free_propagate(VectorField& a, VectorField& da, double t);

// Half-wave group e^{+- i t |D|}.
SpatialField half_wave(const SpatialField& f, int sign, double t);

// u(t) = int_0^t e^{+- i (t-s)|D|} f(s) ds at the samples t_m = m dt of f.
// Composite Simpson on step pairs; the first step uses the quadratic through
// (0, dt, 2 dt).
SpacetimeField duhamel(const SpacetimeField& f, int sign);

// Box phi = f with phi[0] = (g, h); f must be mean-zero in space.
SpacetimeField solve_box(const SpacetimeField& f, const SpatialField& g, const SpatialField& h);
// Same, returning the time derivative too.
std::pair<SpacetimeField, SpacetimeField> solve_box_with_velocity(const SpacetimeField& f, const SpatialField& g,
                                                                  const SpatialField& h);

struct BackgroundSample {
    VectorField A;
    SpatialField A0;
    SpatialField dtA0;
};
using Background = std::function<BackgroundSample(double t)>;

Background frozen_background(const GaugeState& s);
// Linear interpolation in time between stored states (uniform spacing).
Background trace_background(std::vector<GaugeState> states);

struct WaveTrace {
    std::vector<GaugeState> states;
    double dt = 0;
    Scheme scheme = Scheme::trigonometric;
};

struct SolveOptions {
    Scheme scheme = Scheme::trigonometric;
    int store_every = 1;  // keep every k-th step (the final state is always kept)
    std::function<void(const GaugeState&)> observer;  // called after every step
};

// CFL bound 0.5 * (L/N) / sqrt(4).
double cfl_limit(const GridSpec& g);

// D^alpha D_alpha phi = 0 in a prescribed connection.
WaveTrace covariant_solve(const GaugeState& initial, const Background& bg, double T, double dt,
                          const SolveOptions& opt = {});

// Self-consistent MKG in Coulomb gauge: A_x and phi evolve, A0 and dtA0 are
// recomputed from the elliptic equations at every step.
WaveTrace coupled_solve(const GaugeState& initial, double T, double dt, const SolveOptions& opt = {});

// Right-hand side of phi_tt for the covariant equation, excluding Delta phi.
SpatialField covariant_force(const SpatialField& phi, const SpatialField& dtphi, const BackgroundSample& bg);

}  // namespace mkg
