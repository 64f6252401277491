#pragma once

#include <array>
#include <vector>

#include "mkg/field.hpp"

namespace mkg {

// Bilinear forms on space-time traces. Axes: 0 = t, 1..4 = x_1..x_4.
enum class BilinearKind {
    product,             // phi psi
    derivative_product,  // phi d_alpha psi
    im_current,          // Im(phi conj(d_alpha psi))
    nij,                 // d_i phi d_j psi - d_j phi d_i psi   (i < j spatial)
    q0,                  // d_alpha phi d^alpha psi
};

struct BilinearSpec {
    BilinearKind kind = BilinearKind::product;
    int alpha = 0;
    int i = 1, j = 2;
    void validate() const;
};

SpacetimeField apply_bilinear(const BilinearSpec& m, const SpacetimeField& phi, const SpacetimeField& psi);

// d_alpha on a space-time trace (alpha = 0 is time).
SpacetimeField st_partial(const SpacetimeField& f, int alpha);

// N_ij(phi, psi) with spatial indices 1 <= i, j <= 4.
SpacetimeField nij(const SpacetimeField& phi, const SpacetimeField& psi, int i, int j);

struct LerayNullform {
    VectorSpacetimeField direct;    // P(phi grad psi), mean removed
    VectorSpacetimeField nullform;  // Delta^{-1} d_i N_ij(phi, psi)
};
LerayNullform leray_as_nullform(const SpacetimeField& phi, const SpacetimeField& psi);

// H_k M(phi, psi) = sum_{j < k+C} Q_j P_k M(Q_{<j-C} phi, Q_{<j-C} psi)
SpacetimeField hk(const BilinearSpec& m, const SpacetimeField& phi, const SpacetimeField& psi, int k, int C);
// H*_k M(phi, psi) = sum_{j < k+C} Q_{<j-C} M(Q_j P_k phi, Q_{<j-C} psi)
SpacetimeField hk_star(const BilinearSpec& m, const SpacetimeField& phi, const SpacetimeField& psi, int k, int C);

// Modes kept by every identity below: outside the cone band ||tau|-|xi|| < eta,
// xi != 0, and off the Nyquist planes (so first and second derivatives agree
// with the even symbols of box and Delta).
SpacetimeField identity_guard(const SpacetimeField& F, double eta);

struct HAResult {
    VectorSpacetimeField ha;    // HA_i = -sum box^{-1} H_k P_i(phi_k1 grad phi_k2), k < min(k1,k2) - C
    VectorSpacetimeField good;  // quadratic A^nonlin minus HA
    VectorSpacetimeField full;  // -box^{-1} P Im(phi conj grad phi), guarded
};
HAResult ha_extraction(const SpacetimeField& phi, int C, double eta = -1);

enum class CurrentForm { product, im_current };

// Guarded bilinear current u_alpha(phi1, phi2), alpha = 0..4; with C >= 0 the
// high x high -> low part sum_k H_k u(P_{>k+C} phi1, P_{>k+C} phi2).
std::array<SpacetimeField, 5> bilinear_current(const SpacetimeField& phi1, const SpacetimeField& phi2,
                                               CurrentForm form, double eta, int C = -1);

struct Trilinear {
    SpacetimeField q1, q2, q3;
};
// Q1 = box^{-1} u_alpha . d^alpha phi3
// Q2 = Delta^{-1} box^{-1} d_t (d^alpha u_alpha) . d_t phi3
// Q3 = Delta^{-1} box^{-1} d_alpha (div_x u) . d^alpha phi3
// With `localized` the current is the H-part and each product is wrapped as
// sum_k' H*_k'(first, P_{>k'+C} phi3).
Trilinear q1q2q3(const SpacetimeField& phi1, const SpacetimeField& phi2, const SpacetimeField& phi3,
                 bool localized, int C, double eta = -1, CurrentForm form = CurrentForm::product);

// N(A, phi3) = A^alpha d_alpha phi3 for A_0 = -Delta^{-1} u_0, A_x = -box^{-1} P u_x,
// assembled through the Leray / inverse-box pipeline (wrapped like q1q2q3 when localized).
SpacetimeField connection_nullform(const SpacetimeField& phi1, const SpacetimeField& phi2,
                                   const SpacetimeField& phi3, bool localized, int C, double eta = -1,
                                   CurrentForm form = CurrentForm::product);

struct IdentityReport {
    double lhs_norm = 0;
    double rhs_norm = 0;
    double residual = 0;  // ||lhs - rhs|| / ||lhs|| (0 when both vanish)
    double eta = 0;
};
// N(A, phi) = -Q1 + Q2 + Q3 with the Im current of a single trace.
IdentityReport appendix_identity_check(const SpacetimeField& phi, double eta = -1);

}  // namespace mkg
