#pragma once

#include <array>
#include <vector>

#include "mkg/field.hpp"

namespace mkg {

// Index convention: alpha = 0 is time, alpha = 1..4 are x_1..x_4 (array slot alpha-1).
// Metric diag(1,-1,-1,-1,-1); D_alpha = d_alpha + i A_alpha.
struct GaugeState {
    GridSpec grid;
    VectorField A;      // A_1..A_4, real
    VectorField dtA;    // real
    SpatialField A0;    // real
    SpatialField dtA0;  // real
    SpatialField phi;   // complex
    SpatialField dtphi; // complex
    double time = 0;

    static GaugeState zero(const GridSpec& g);
    void check_grid() const;
};

struct CurrentDensity {
    SpatialField J0;
    VectorField J;  // J_1..J_4 (lower indices)
};

struct EnergyReport {
    double field = 0;   // 1/2 sum_j F_{0j}^2 + 1/2 sum_{i<j} F_{ij}^2
    double matter = 0;  // 1/2 sum_alpha |D_alpha phi|^2
    double total = 0;
};

// F[a][b] = d_a A_b - d_b A_a for a, b in 0..4.
using Curvature = std::array<std::array<SpatialField, 5>, 5>;

struct GaugeFunction {
    SpatialField chi;     // real
    SpatialField dtchi;   // real
    SpatialField dttchi;  // real; only enters dtA0
};

SpatialField covariant_derivative(const GaugeState& s, int alpha);
Curvature curvature(const GaugeState& s);
CurrentDensity current(const GaugeState& s);
// J_0 = -Im(phi conj(dtphi + i A0 phi)) without a full state.
SpatialField charge_density(const SpatialField& phi, const SpatialField& dtphi, const SpatialField& A0);
VectorField spatial_current(const SpatialField& phi, const VectorField& A);
EnergyReport energy(const GaugeState& s);
GaugeState gauge_transform(const GaugeState& s, const GaugeFunction& g);

// x -> lambda x scaling onto the companion grid (lambda in {2, 1/2}). Content
// that does not fit the companion lattice is an error once it exceeds `tol`
// relative to the largest coefficient of its component.
GaugeState rescale(const GaugeState& s, double lambda, double tol = 1e-9);

enum class MeanPolicy { reject, project };

struct EllipticOptions {
    double tol = 1e-14;
    int max_iter = 200;
    MeanPolicy mean = MeanPolicy::reject;
};

// Solve Delta A0 = J_0(phi, dtphi, A0) by fixed-point iteration (A0 mean-zero).
SpatialField solve_A0(const SpatialField& phi, const SpatialField& dtphi, const EllipticOptions& opt = {},
                      const SpatialField* guess = nullptr);
// A0 = Delta^{-1} J_0, dtA0 = Delta^{-1} div J for a given current.
std::pair<SpatialField, SpatialField> elliptic_A0(const CurrentDensity& J, MeanPolicy mean = MeanPolicy::reject);

// Coulomb-fix raw data and complete it with A0, dtA0.
GaugeState prepare_data(const VectorField& A, const VectorField& dtA, const SpatialField& phi,
                        const SpatialField& dtphi, const EllipticOptions& opt = {});

// Diagnostics.
double coulomb_residual(const GaugeState& s);    // max of ||div A||, ||div dtA|| relative to ||grad A||
double a0_residual(const GaugeState& s);         // ||Delta A0 - J_0|| / ||J_0||
double dta0_residual(const GaugeState& s);       // ||Delta dtA0 - div J|| / ||div J||
// sup_t ||d_t J_0 - div J||_{L^2} with centred differences on a uniform trace.
double current_divergence_residual(const std::vector<GaugeState>& trace);

}  // namespace mkg
