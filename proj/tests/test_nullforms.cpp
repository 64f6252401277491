#include <chrono>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"
#include "mkg/nullforms.hpp"
#include "test_util.hpp"

using namespace mkg;

namespace {

// Window 2 pi: tau unit 1, xi unit 1.
GridSpec nf_grid(int n, int nt) {
    GridSpec g;
    g.n = n;
    g.nt = nt;
    g.window = 2 * std::numbers::pi;
    return g;
}

SpacetimeField st_mode(const GridSpec& g, const std::array<int, 4>& n, int m, cplx amp = 1.0) {
    SpacetimeField F(g);
    const auto w = plane_wave(g, n, amp);
    for (int s = 0; s < g.nt; ++s) set_time_slice(F, s, std::exp(cplx(0, m * g.tau_unit() * s * g.dt())) * w);
    return F;
}

double max_rel(const SpacetimeField& a, const SpacetimeField& b) {
    return max_abs(a - b) / std::max(1e-300, max_abs(b));
}

}  // namespace

TEST_CASE("N_ij examples and antisymmetry") {
    const auto g = nf_grid(8, 4);
    const auto phi = testutil::guarded_spacetime(g, 1, 2, 1, 0);
    const auto psi = testutil::guarded_spacetime(g, 2, 2, 1, 0);
    CHECK(max_abs(nij(phi, phi, 1, 3)) < 1e-13 * std::pow(max_abs(phi), 2) * 4);
    CHECK(max_abs(nij(phi, psi, 2, 4) + nij(phi, psi, 4, 2)) == 0.0);
    // Parallel spatial frequencies.
    CHECK(max_abs(nij(st_mode(g, {1, 2, 0, 0}, 1), st_mode(g, {-1, -2, 0, 0}, 0), 1, 2)) < 1e-12);
    // Generic pair: -(n_i m_j - n_j m_i) e^{i(n+m).x}.
    const std::array<int, 4> n{1, 2, 0, -1}, m{0, 1, 3, 1};
    const auto out = nij(st_mode(g, n, 0), st_mode(g, m, 1), 1, 3);
    const double det = n[0] * m[2] - n[2] * m[0];
    const auto expect = -det * st_mode(g, {1, 3, 3, 0}, 1);
    CHECK(max_rel(out, expect) < 1e-12);
    BilinearSpec bad;
    bad.kind = BilinearKind::nij;
    bad.i = 3;
    bad.j = 2;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("Leray projection as a null form") {
    const auto g = nf_grid(8, 2);
    double worst = 0;
    for (unsigned seed = 0; seed < 50; ++seed) {
        // |n_i| <= 1 keeps the products alias-free on N = 8.
        const auto phi = testutil::guarded_spacetime(g, 100 + seed, 1, 1, 0);
        const auto psi = testutil::guarded_spacetime(g, 200 + seed, 1, 1, 0);
        const auto r = leray_as_nullform(phi, psi);
        double num = 0, den = 0;
        for (int d = 0; d < kDim; ++d) {
            num += std::pow(l2_norm(r.direct[d] - r.nullform[d]), 2);
            den += std::pow(l2_norm(r.direct[d]), 2);
        }
        worst = std::max(worst, std::sqrt(num / den));
        if (seed == 0) {
            SpacetimeField div(g);
            for (int d = 0; d < kDim; ++d) div += partial(r.nullform[d], d);
            CHECK(max_abs(div) < 1e-12 * max_abs(r.nullform[0]));
        }
    }
    INFO("worst relative mismatch " << worst);
    CHECK(worst < 1e-12);

    SpacetimeField c(g);
    for (auto& x : c.v) x = 2.5;
    const auto r = leray_as_nullform(c, testutil::guarded_spacetime(g, 3, 1, 1, 0));
    for (int d = 0; d < kDim; ++d) {
        CHECK(max_abs(r.nullform[d]) < 1e-13);
        CHECK(max_abs(r.direct[d]) < 1e-13);
    }
}

TEST_CASE("H_k examples") {
    const auto g = nf_grid(8, 16);
    BilinearSpec prod;
    // Cone modes (xi, tau) = ((2,0,0,0), 2) and ((1,0,0,0), -1): the product sits
    // at |xi| = 3, tau = 1, modulation exactly 2 = 2^1.
    const auto phi = st_mode(g, {2, 0, 0, 0}, 2);
    const auto psi = st_mode(g, {1, 0, 0, 0}, -1);
    const auto P = apply_bilinear(prod, phi, psi);
    const auto h = hk(prod, phi, psi, 2, 0);
    CHECK(max_rel(h, qj(pk(P, 2), 1)) < 1e-12);
    CHECK(max_abs(h) == doctest::Approx(lp::chi(0.75)).epsilon(1e-12));
    CHECK(max_abs(hk(prod, phi, psi, 1, 0)) < 1e-14);  // j = 1 is not below k + C

    // High-modulation inputs: Q_{<j-C} removes them for every j < k + C.
    const auto hi1 = st_mode(g, {1, 0, 0, 0}, 7);  // modulation 6
    const auto hi2 = st_mode(g, {0, 1, 0, 0}, -7);
    CHECK(max_abs(hk(prod, hi1, hi2, 0, 2)) < 1e-14);

    // Output spectrum lies in supp P_k x {modulation < 2^{k+C}}; complement sums back.
    const auto a = testutil::guarded_spacetime(g, 5, 2, 4, 0);
    const auto b = testutil::guarded_spacetime(g, 6, 2, 4, 0);
    const int k = 1, C = 1;
    const auto hkab = hk(prod, a, b, k, C);
    const auto c = fft(hkab);
    const auto& bk = bank(g);
    const auto& mod = bk.modulation();
    const auto& rad = bk.radius();
    double outside = 0, peak = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        peak = std::max(peak, std::abs(c[i]));
        const double r = rad[i % g.spatial_size()] / std::exp2(k);
        if (r <= 0.5 || r >= 2 || mod[i] >= std::exp2(k + C)) outside = std::max(outside, std::abs(c[i]));
    }
    CHECK(peak > 0);
    CHECK(outside < 1e-12 * peak);
    const auto PkM = pk(apply_bilinear(prod, a, b), k);
    CHECK(max_rel(hkab + (PkM - hkab), PkM) < 1e-14);
}

TEST_CASE("H*_k localizes the first input") {
    const auto g = nf_grid(8, 16);
    BilinearSpec prod;
    // First input: |xi| = 2 (k = 1), modulation 1 (j = 0); second on the cone.
    const auto phi = st_mode(g, {2, 0, 0, 0}, 3);
    const auto psi = st_mode(g, {0, 1, 0, 0}, -1);
    const auto h = hk_star(prod, phi, psi, 1, 2);
    // Only j = 0 contributes; the output (xi = (2,1,0,0), tau = 2) has modulation
    // 2 - sqrt 5 in absolute value and is weighted by Q_{<-2}.
    const double out_mod = std::sqrt(5.0) - 2;
    const double expect = lp::low(out_mod / std::exp2(-2));
    CHECK(expect > 1e-3);
    CHECK(expect < 0.99);
    CHECK(max_abs(h) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("connection identity holds to roundoff") {
    for (int n : {8, 16}) {
        const auto g = nf_grid(n, 16);
        const double eta = 0.5;
        const auto phi = testutil::guarded_spacetime(g, 7 + n, 2, 4, eta);
        const auto rep = appendix_identity_check(phi, eta);
        INFO("N = " << n << " residual " << rep.residual);
        CHECK(rep.lhs_norm > 0);
        CHECK(rep.residual < 1e-10);
    }
    const auto g = nf_grid(8, 16);
    const auto zero = appendix_identity_check(SpacetimeField(g), 0.5);
    CHECK(zero.lhs_norm == 0.0);
    CHECK(zero.residual == 0.0);
    // Unguarded input: exact cone mode.
    CHECK_THROWS_AS(appendix_identity_check(st_mode(g, {1, 0, 0, 0}, 1), 0.5), ConeResonance);
}

TEST_CASE("trilinear forms: flag off consistency") {
    const auto g = nf_grid(8, 16);
    const double eta = 0.5;
    const auto p1 = testutil::guarded_spacetime(g, 31, 2, 4, eta);
    const auto p2 = testutil::guarded_spacetime(g, 32, 2, 4, eta);
    const auto p3 = testutil::guarded_spacetime(g, 33, 2, 4, eta);
    const auto t0 = q1q2q3(p1, SpacetimeField(g), p3, false, 0, eta);
    CHECK(max_abs(t0.q1) == 0.0);
    CHECK(max_abs(t0.q2) == 0.0);
    CHECK(max_abs(t0.q3) == 0.0);

    const auto t = q1q2q3(p1, p2, p3, false, 0, eta);
    const auto n = connection_nullform(p1, p2, p3, false, 0, eta);
    CHECK(testutil::rel(t.q2 + t.q3 - t.q1, n) < 1e-10);

    const auto ti = q1q2q3(p1, p1, p1, false, 0, eta, CurrentForm::im_current);
    const auto rep = appendix_identity_check(p1, eta);
    const auto ni = connection_nullform(p1, p1, p1, false, 0, eta, CurrentForm::im_current);
    CHECK(testutil::rel(ti.q2 + ti.q3 - ti.q1, ni) == doctest::Approx(rep.residual).epsilon(1e-6));
}

TEST_CASE("trilinear forms: localized decomposition R = Q1 - Q2 - Q3") {
    const auto g = nf_grid(8, 16);
    const double eta = 0.5;
    const auto p1 = testutil::guarded_spacetime(g, 41, 3, 6, eta);
    const auto p2 = testutil::guarded_spacetime(g, 42, 3, 6, eta);
    const auto p3 = testutil::guarded_spacetime(g, 43, 3, 6, eta);
    for (int C : {0, 1, 3, 5, 7}) {
        const auto t = q1q2q3(p1, p2, p3, true, C, eta);
        const auto R = -1.0 * connection_nullform(p1, p2, p3, true, C, eta);
        const auto rhs = t.q1 - t.q2 - t.q3;
        const double rn = l2_norm(R);
        INFO("C = " << C << " |R| = " << rn);
        if (C <= 1) CHECK(rn > 1e-6);
        CHECK(l2_norm(R - rhs) <= 1e-10 * std::max(rn, 1e-300) + 1e-14);
    }
}

TEST_CASE("bad part of the connection") {
    const auto g = nf_grid(8, 16);
    const double eta = 0.5;
    // Single space-time mode: the current is constant, nothing survives.
    const auto one = ha_extraction(st_mode(g, {3, 0, 0, 0}, 3, 0.4), 1, eta);
    for (int d = 0; d < kDim; ++d) {
        CHECK(max_abs(one.ha[d]) < 1e-14);
        CHECK(max_abs(one.full[d]) < 1e-14);
    }

    // Two high modes beating at Delta xi = (0,-1,0,0), Delta tau = 0.
    const double a = 0.3, b = 0.2;
    const auto phi = st_mode(g, {3, 0, 0, 0}, 3, a) + st_mode(g, {3, 1, 0, 0}, 3, b);
    const int C = 1;
    const auto r = ha_extraction(phi, C, eta);

    // Term enumeration with the scalar profiles.
    const double x1 = 3, x2 = std::sqrt(10.0), beat = 1, mA = 0, mB = x2 - 3, mbeat = 1;
    double W = 0;
    for (int k = -3; k <= 6; ++k) {
        double s1 = 0, s2 = 0;
        for (int k1 = k + C + 1; k1 <= 8; ++k1) {
            s1 += lp::chi(x1 / std::exp2(k1));
            s2 += lp::chi(x2 / std::exp2(k1));
        }
        for (int j = -6; j < k + C; ++j)
            W += s1 * s2 * lp::low(mA / std::exp2(j - C)) * lp::low(mB / std::exp2(j - C)) *
                 lp::chi(beat / std::exp2(k)) * lp::chi(mbeat / std::exp2(j));
    }
    CHECK(W > 0.1);
    // u_x beat part: -ab (n1 + n2) cos(theta); Leray leaves (6,0,0,0); box symbol -1.
    double err = 0, ref = 0;
    for (int m = 0; m < g.nt; m += 3) {
        const auto s0 = time_slice(r.ha[0], m);
        for (std::size_t x = 0; x < s0.size(); x += 11) {
            const double expect = -a * b * W * 6 * std::cos(position(g, x)[1]);
            err = std::max(err, std::abs(s0[x] - expect));
            ref = std::max(ref, std::abs(expect));
        }
        for (int d = 1; d < kDim; ++d) CHECK(max_abs(time_slice(r.ha[d], m)) < 1e-14);
    }
    INFO("err " << err << " ref " << ref);
    CHECK(ref > 0);
    CHECK(err < 1e-12 * ref);
    for (int d = 0; d < kDim; ++d) CHECK(max_abs(r.ha[d] + r.good[d] - r.full[d]) < 1e-15);
}
