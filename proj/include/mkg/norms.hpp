#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mkg/field.hpp"

namespace mkg {

struct NormReport {
    std::string id;
    std::map<int, double> per_k;
    double aggregate = 0;
    std::string summation;  // "l1", "l2" or "sup"
    bool clipped = false;   // dyadic range clipped to the resolvable one
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// 1/q + (3/2)/r <= 3/4 with 2 <= q, r <= infinity.
bool strichartz_admissible(double q, double r);

// L^q_t L^r_x over the sample window (L^inf as max over samples).
double lqlr(const SpacetimeField& F, double q, double r);
// Pointwise Euclidean norm over components.
double lqlr(const std::vector<SpacetimeField>& F, double q, double r);

// 2^{(1/q + 4/r - 2) k} ||F||_{L^q L^r}; throws InvalidArgument if inadmissible.
double strichartz_norm(const SpacetimeField& F, double q, double r, int k);
double strichartz_norm(const std::vector<SpacetimeField>& F, double q, double r, int k);

// Per k: 2^{sk} (sum_j [2^{rj} ||Q_j P_k F||_{L^2}]^p)^{1/p}; p = kInf gives the
// sup over j. The aggregate is the l^2 sum over k. The grid taper is applied.
NormReport xsb_norm(const SpacetimeField& F, double s, double r, double p);
NormReport xsb_norm(const std::vector<SpacetimeField>& F, double s, double r, double p);

// sum_k 2^{-k/2} ||P_k box F||_{L^2 L^2}; d_t^2 by fourth-order finite differences.
NormReport himod_norm(const SpacetimeField& F);
// Same sum for a given source f (the forward oracle).
NormReport dyadic_l1_norm(const SpacetimeField& f, double weight_exp);

// Fourth-order finite-difference second time derivative (one-sided at the ends).
SpacetimeField fd_second_derivative(const SpacetimeField& F);
SpacetimeField fd_first_derivative(const SpacetimeField& F);

// Finite-difference weights for derivative `order` at x = 0 from the nodes (Fornberg).
std::vector<double> fd_weights(const std::vector<double>& nodes, int order);

}  // namespace mkg
