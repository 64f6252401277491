#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mkg/multipliers.hpp"
#include "test_util.hpp"

using namespace mkg;
using testutil::rel;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.n = 8;
    g.period = 2 * std::numbers::pi;
    g.nt = 16;
    g.window = 2 * std::numbers::pi;
    return g;
}

// e^{i(tau t + xi.x)} with integer lattice indices.
SpacetimeField st_mode(const GridSpec& g, int m, const std::array<int, 4>& n) {
    SpacetimeField F(g);
    const std::size_t ns = g.spatial_size();
    for (int it = 0; it < g.nt; ++it) {
        const double t = it * g.dt();
        for (std::size_t i = 0; i < ns; ++i) {
            const Vec4 x = position(g, i);
            double ph = m * g.tau_unit() * t;
            for (int a = 0; a < 4; ++a) ph += n[a] * g.xi_unit() * x[a];
            F[it * ns + i] = std::exp(cplx(0, ph));
        }
    }
    return F;
}

}  // namespace

TEST_CASE("bump: partition of unity, support and centre") {
    CHECK(lp::chi(1.0) == doctest::Approx(1.0));
    CHECK(lp::low(0.0) == 1.0);
    for (double r = 1e-3; r < 1e3; r *= 1.0137) {
        double s = 0;
        for (int k = -20; k <= 20; ++k) s += lp::chi(r * std::ldexp(1.0, -k));
        CHECK(std::abs(s - 1.0) < 1e-14);
        if (r < 0.5 || r > 2) CHECK(lp::chi(r) == 0.0);
        if (r >= 0.5 && r <= 2) CHECK(lp::widened(r) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("apply_spatial_multiplier examples") {
    const GridSpec g = small_grid();
    const auto f = testutil::random_field(g, 1);
    auto id = apply_spatial_multiplier(f, [](const Vec4&, const Vec4&) { return cplx(1.0); });
    CHECK(rel(id, f) < 1e-14);

    const auto e = plane_wave(g, {1, -2, 0, 3});
    auto m = apply_spatial_multiplier(e, [](const Vec4& xi, const Vec4&) { return cplx(xi[0] + 2 * xi[3], 0.5); });
    const cplx expect(1.0 + 6.0, 0.5);
    CHECK(rel(m, expect * e) < 1e-13);

    auto c = f;
    for (auto& x : c.v) x += 1.0;
    auto sing = [](const Vec4& xi, const Vec4&) { return cplx(1.0 / dot(xi, xi)); };
    CHECK_THROWS_AS(apply_spatial_multiplier(c, sing), SingularSymbol);
    // Mean-zero input passes.
    auto z = testutil::random_field(g, 2, true, 1e9, true);
    CHECK_NOTHROW(apply_spatial_multiplier(z, sing));
}

TEST_CASE("Plancherel on 100 random fields") {
    const GridSpec g = small_grid();
    double worst = 0;
    for (unsigned s = 0; s < 100; ++s) {
        const auto f = testutil::random_field(g, 100 + s, s % 2 == 0);
        worst = std::max(worst, std::abs(l2_norm(f) - l2_norm(fft(f))) / l2_norm(f));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("real fields have Hermitian spectra") {
    const auto f = testutil::random_field(small_grid(), 7, true);
    CHECK(hermitian_defect(fft(f)) < 1e-13);
}

TEST_CASE("pk examples and partition of unity") {
    GridSpec g = small_grid();
    g.n = 16;
    SpatialField one(g, Parity::real);
    for (auto& x : one.v) x = 3.0;
    for (int k = g.k_min(); k <= g.k_max(); ++k) CHECK(max_abs(pk(one, k)) < 1e-14);

    const auto e = plane_wave(g, {4, 0, 0, 0});  // |xi| = 4 = 2^2
    CHECK(rel(pk(e, 2), e) < 1e-14);
    CHECK(max_abs(pk(e, 1)) < 1e-14);

    OpFlags fl;
    CHECK(max_abs(pk(e, g.k_max() + 3, &fl)) == 0.0);
    CHECK(fl.out_of_range);

    const auto f = testutil::random_field(g, 3);
    auto sum = f.zeros_like();
    for (int k = g.k_min(); k <= g.k_max(); ++k) sum += pk(f, k);
    auto fm = f;
    const cplx mu = mean(f);
    for (auto& x : fm.v) x -= mu;
    CHECK(l2_norm(sum - fm) / l2_norm(f) < 1e-12);

    for (int k = g.k_min(); k <= g.k_max(); ++k) {
        const auto pkf = pk(f, k);
        CHECK(l2_norm(p_tilde(pkf, k) - pkf) <= 1e-12 * l2_norm(f));
    }
}

TEST_CASE("pk output support") {
    GridSpec g = small_grid();
    g.n = 16;
    const auto f = testutil::random_field(g, 4);
    for (int k = 0; k <= 3; ++k) {
        const auto c = fft(pk(f, k));
        double outside = 0;
        for_each_mode(g, [&](std::size_t i, const Vec4& xi, const Vec4&) {
            const double r = norm(xi);
            if (r < std::ldexp(1.0, k - 2) || r > std::ldexp(1.0, k + 2)) outside = std::max(outside, std::abs(c[i]));
        });
        CHECK(outside < 1e-14);
    }
}

TEST_CASE("leray examples and invariants") {
    const GridSpec g = small_grid();
    const auto chi = testutil::random_field(g, 5);
    auto grad = gradient(chi);
    CHECK(l2_norm(leray(grad)) < 1e-12 * l2_norm(grad));

    VectorField a;
    for (int d = 0; d < 4; ++d) a[d] = testutil::random_field(g, 10 + d, true, 1e9, true);
    const auto pa = leray(a);
    const auto ppa = leray(pa);
    VectorField diff;
    for (int d = 0; d < 4; ++d) diff[d] = ppa[d] - pa[d];
    CHECK(l2_norm(diff) < 1e-12 * l2_norm(pa));
    CHECK(l2_norm(divergence(pa)) < 1e-12 * l2_norm(a));
    // Divergence-free input is fixed.
    const auto p3 = leray(pa);
    for (int d = 0; d < 4; ++d) CHECK(rel(p3[d], pa[d]) < 1e-12);

    // Single mode: (v - xi (xi.v)/|xi|^2) e^{i xi.x}.
    const std::array<int, 4> n{1, 2, 0, -1};
    const Vec4 v{0.3, -1.0, 2.0, 0.5};
    VectorField m;
    for (int d = 0; d < 4; ++d) m[d] = plane_wave(g, n, v[d]);
    const auto pm = leray(m);
    const double nn = 1 + 4 + 1, nv = 0.3 - 2.0 - 0.5;
    for (int d = 0; d < 4; ++d) CHECK(rel(pm[d], plane_wave(g, n, v[d] - n[d] * nv / nn)) < 1e-13);
}

TEST_CASE("leray symbol is a rank-3 orthogonal projection") {
    for_each_mode(small_grid(), [&](std::size_t, const Vec4&, const Vec4& xd) {
        if (dot(xd, xd) == 0) return;
        const Mat4 p = leray_symbol(xd);
        double tr = 0, err = 0;
        for (int a = 0; a < 4; ++a) {
            tr += p[a][a].real();
            for (int b = 0; b < 4; ++b) {
                cplx s = 0;
                for (int c = 0; c < 4; ++c) s += p[a][c] * p[c][b];
                err = std::max({err, std::abs(s - p[a][b]), std::abs(p[a][b] - p[b][a])});
            }
        }
        CHECK(tr == doctest::Approx(3.0));
        CHECK(err < 1e-15);
    });
}

TEST_CASE("qj examples") {
    const GridSpec g = small_grid();  // tau and xi share the unit 1
    // Exact cone mode: |xi| = |(0,3,0,0)| = 3, tau = 3.
    const auto cone = st_mode(g, 3, {0, -3, 0, 0});
    const int jres = int(std::ceil(std::log2(4 * g.tau_unit())));
    for (int j = jres; j <= bank(g).j_max(); ++j) CHECK(max_abs(qj(cone, j)) < 1e-13);
    // Off-cone mode with modulation 4 = 2^2 sits in bin 2 only.
    const auto off = st_mode(g, 7, {3, 0, 0, 0});
    CHECK(rel(qj(off, 2), off) < 1e-13);
    CHECK(max_abs(qj(off, 1)) < 1e-13);
    CHECK(max_abs(qj(off, 3)) < 1e-13);
}

TEST_CASE("sum of qj reconstructs F minus exact cone modes") {
    const GridSpec g = small_grid();
    const auto F = testutil::random_spacetime(g, 9);
    auto sum = F.zeros_like();
    const auto& b = bank(g);
    for (int j = b.j_min(); j <= b.j_max(); ++j) sum += qj(F, j);
    // Oracle: zero the cone modes by integer arithmetic (L = T = 2 pi).
    auto c = fft(F);
    const std::size_t ns = g.spatial_size();
    for (int m = 0; m < g.nt; ++m) {
        const int tm = signed_index(m, g.nt);
        for (std::size_t i = 0; i < ns; ++i) {
            std::size_t r = i;
            int s2 = 0;
            for (int a = 0; a < 4; ++a) {
                const int q = signed_index(int(r % g.n), g.n);
                s2 += q * q;
                r /= g.n;
            }
            if (tm * tm == s2) c[m * ns + i] = 0;
        }
    }
    const auto expect = ifft(c);
    CHECK(rel(sum, expect) < 1e-12);
}

TEST_CASE("qj commutes with pk") {
    const GridSpec g = small_grid();
    const auto F = testutil::random_spacetime(g, 11);
    for (int j = 0; j <= 2; ++j)
        for (int k = 0; k <= 2; ++k) {
            const auto a = qj(pk(F, k), j);
            const auto b = pk(qj(F, j), k);
            CHECK(l2_norm(a - b) <= 1e-12 * std::max(1e-300, l2_norm(a)) + 1e-300);
        }
}

TEST_CASE("inv_box examples") {
    const GridSpec g = small_grid();
    const auto F = st_mode(g, 7, {2, 0, 1, 0});  // tau^2 - |xi|^2 = 49 - 5
    CHECK(rel(inv_box(F), (1.0 / 44.0) * F) < 1e-13);
    CHECK(max_abs(inv_box(SpacetimeField(g))) == 0.0);

    auto R = cone_guard(testutil::random_spacetime(g, 12));
    CHECK(rel(box(inv_box(R)), R) < 1e-12);

    const auto bad = st_mode(g, 3, {1, 2, 1, 0});  // ||tau|-|xi|| = 3 - sqrt 6 < eta
    try {
        inv_box(bad);
        CHECK(false);
    } catch (const ConeResonance& e) {
        CHECK(e.tau == doctest::Approx(3.0));
        CHECK(e.xi_norm == doctest::Approx(std::sqrt(6.0)));
    }
}

TEST_CASE("inverse laplacian zero-mode conventions") {
    const GridSpec g = small_grid();
    auto f = testutil::random_field(g, 13);
    OpFlags fl;
    const auto u = inv_laplacian(f, ZeroMode::pass, &fl);
    CHECK(fl.mean_passed);
    CHECK(std::abs(mean(u) - mean(f)) < 1e-14);
    CHECK_THROWS_AS(inv_laplacian(f, ZeroMode::error), SingularSymbol);
    const auto z = inv_laplacian(f, ZeroMode::drop);
    auto fm = f;
    const cplx mu = mean(f);
    for (auto& x : fm.v) x -= mu;
    CHECK(rel(laplacian(z), fm) < 1e-12);
}

TEST_CASE("spectral derivative of a sine mode") {
    const GridSpec g = small_grid();
    const auto s = sample(g, [](const Vec4& x) { return cplx(std::sin(2 * x[1])); }, Parity::real);
    const auto ds = partial(s, 1);
    const auto expect = sample(g, [](const Vec4& x) { return cplx(2 * std::cos(2 * x[1])); }, Parity::real);
    CHECK(rel(ds, expect) < 1e-13);
}
