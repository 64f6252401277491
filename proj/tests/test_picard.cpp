#include <chrono>
#include <cmath>

#include "doctest.h"
#include "mkg/multipliers.hpp"
#include "mkg/picard.hpp"
#include "mkg/random_data.hpp"
#include "test_util.hpp"

using namespace mkg;

namespace {

GridSpec small_grid(int n = 8, int nt = 32) {
    GridSpec g;
    g.n = n;
    g.nt = nt;
    g.window = 1.0;
    return g;
}

double free_energy(const GaugeState& s) {
    double e = 0;
    auto add = [&](const SpatialField& u, const SpatialField& du) {
        for (int d = 0; d < kDim; ++d) e += std::pow(l2_norm(partial(u, d)), 2);
        e += std::pow(l2_norm(du), 2);
    };
    for (int i = 0; i < kDim; ++i) add(s.A[i], s.dtA[i]);
    add(s.phi, s.dtphi);
    return 0.5 * e;
}

// 64-point Gauss-Legendre on [0, t].
double gauss(double t, const std::function<double(double)>& f) {
    static std::vector<double> x, w;
    if (x.empty()) {
        const int n = 64;
        for (int i = 1; i <= n; ++i) {
            double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5)), pp = 0;
            for (int it = 0; it < 100; ++it) {
                double p1 = 1, p2 = 0;
                for (int j = 1; j <= n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
                }
                pp = n * (z * p1 - p2) / (z * z - 1);
                const double dz = p1 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x.push_back(z);
            w.push_back(2 / ((1 - z * z) * pp * pp));
        }
    }
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f(0.5 * t * (x[i] + 1));
    return 0.5 * t * acc;
}

}  // namespace

TEST_CASE("zero data gives zero iterates and zero diffs") {
    const auto g = small_grid(8, 16);
    const auto data = GaugeState::zero(g);
    PicardOptions opt;
    opt.max_iterates = 4;
    const auto tr = picard_iterate(data, opt);
    CHECK(tr.count == 4);
    REQUIRE(tr.diffs.size() == 3);
    for (const auto& d : tr.diffs) {
        CHECK(d.energy == 0.0);
        CHECK(d.strichartz == 0.0);
        CHECK(d.xsb == 0.0);
    }
    for (double r : tr.ratios) CHECK(std::isnan(r));
    CHECK(max_abs(tr.iterates.back().phi) == 0.0);
    const auto rep = convergence_report({{0.0, tr}});
    CHECK(rep.fits[0].points == 0);
}

TEST_CASE("first iterate is the free evolution") {
    const auto g = small_grid(8, 16);
    auto data = GaugeState::zero(g);
    data.phi = testutil::random_field(g, 11, false, 1.5, true);
    data.dtphi = testutil::random_field(g, 12, false, 1.5, true);
    const auto it = init_iterate(data);
    for (int i = 0; i < kDim; ++i) CHECK(max_abs(it.A[i]) == 0.0);
    CHECK(max_abs(it.A0) == 0.0);
    const auto [p, v] = free_propagate(data.phi, data.dtphi, 5 * g.dt());
    CHECK(testutil::rel(time_slice(it.phi, 5), p) < 1e-15);

    DataSpec spec;
    spec.kmax = 1;
    const auto full = generate_data(g, spec);
    const auto it2 = init_iterate(full);
    const double e0 = free_energy(full);
    for (int m = 0; m < g.nt; m += 5) CHECK(std::abs(free_energy(it2.slice(m)) / e0 - 1) < 1e-13);
    auto noa0 = full;
    noa0.A0 = SpatialField(g, Parity::real);
    noa0.dtA0 = SpatialField(g, Parity::real);
    CHECK(energy(it2.slice(0)).total == doctest::Approx(energy(noa0).total).epsilon(1e-14));
}

TEST_CASE("second iterate connection matches direct Duhamel quadrature") {
    const auto g = small_grid(8, 64);
    const std::array<int, 4> n1{1, 0, 0, 0}, n2{0, 1, 1, 0};
    const double a = 0.3, b = 0.2, w1 = 1.0, w2 = std::sqrt(2.0);
    auto data = GaugeState::zero(g);
    data.phi = plane_wave(g, n1, a) + plane_wave(g, n2, b);
    const auto it = picard_step(init_iterate(data), data);

    // J_x = ab c1 c2 (n1 + n2) cos(q.x) plus a constant; Leray keeps v below.
    const Vec4 v{4.0 / 3, 2.0 / 3, 2.0 / 3, 0};
    const double qn = std::sqrt(3.0);
    double err = 0, ref = 0;
    for (int m = 0; m < g.nt; m += 7) {
        const double t = m * g.dt();
        const double I = gauss(t, [&](double s) {
            return std::sin((t - s) * qn) / qn * std::cos(w1 * s) * std::cos(w2 * s);
        });
        const auto slice = time_slice(it.A[0], m);
        for (std::size_t x = 0; x < slice.size(); x += 37) {
            const auto pos = position(g, x);
            const double qx = pos[0] - pos[1] - pos[2];
            for (int i = 0; i < 1; ++i) {
                const double expect = -v[i] * a * b * std::cos(qx) * I;
                err = std::max(err, std::abs(slice[x].real() - expect));
                ref = std::max(ref, std::abs(expect));
            }
        }
        for (int i = 1; i < kDim; ++i) {
            const auto si = time_slice(it.A[i], m);
            for (std::size_t x = 0; x < si.size(); x += 37) {
                const auto pos = position(g, x);
                const double expect = -v[i] * a * b * std::cos(pos[0] - pos[1] - pos[2]) * I;
                err = std::max(err, std::abs(si[x].real() - expect));
            }
        }
    }
    INFO("err " << err << " ref " << ref);
    CHECK(ref > 1e-3);
    CHECK(err < 1e-6 * ref);
    // The nonlinear part vanishes at t = 0.
    const auto nl = nonlinear_part(it, data);
    for (int i = 0; i < kDim; ++i) CHECK(max_abs(time_slice(nl[i], 0)) == 0.0);
}

TEST_CASE("current of a covariant iterate is conserved to solver order") {
    const auto g = small_grid(8, 16);
    DataSpec spec;
    spec.kmax = 1;
    spec.eps = 0.05;
    const auto data = generate_data(g, spec);
    const auto it1 = picard_step(init_iterate(data), data);
    auto residual = [&](int substeps) {
        PicardOptions opt;
        opt.substeps = substeps;
        const auto it2 = picard_step(it1, data, opt);
        // phi^{(2)} evolves in the connection of iterate 1.
        std::vector<GaugeState> tr;
        for (int m = 0; m < g.nt; ++m) {
            auto s = it1.slice(m);
            s.phi = time_slice(it2.phi, m);
            s.dtphi = time_slice(it2.dtphi, m);
            tr.push_back(s);
        }
        return current_divergence_residual(tr);
    };
    const double r1 = residual(1), r2 = residual(2);
    INFO("residuals " << r1 << " " << r2);
    CHECK(r2 < r1);
}

TEST_CASE("Picard differences contract at small amplitude") {
    const auto g = small_grid(8, 32);
    DataSpec spec;
    spec.kmax = 1;
    spec.eps = 0.02;
    const auto data = generate_data(g, spec);
    PicardOptions opt;
    opt.max_iterates = 5;
    opt.tol = 0;
    const auto tr = picard_iterate(data, opt);
    REQUIRE(tr.diffs.size() == 4);
    // Compare only above the roundoff floor of the stored traces.
    for (std::size_t i = 1; i < tr.diffs.size(); ++i) {
        if (tr.diffs[i - 1].energy < 1e-13) break;
        CHECK(tr.diffs[i].energy < tr.diffs[i - 1].energy);
        CHECK(tr.diffs[i].strichartz < tr.diffs[i - 1].strichartz);
        CHECK(tr.diffs[i].xsb < tr.diffs[i - 1].xsb);
    }
    REQUIRE_FALSE(std::isnan(tr.ratios.at(0)));
    CHECK(tr.ratios[0] < 0.5);

    // Halving the amplitude roughly halves the contraction ratio.
    spec.eps = 0.01;
    opt.max_iterates = 3;
    const auto half = picard_iterate(generate_data(g, spec), opt);
    const double q = half.ratios.at(0) / tr.ratios[0];
    INFO("ratio scaling " << q);
    CHECK(q > 0.3);
    CHECK(q < 0.7);
}

TEST_CASE("decay fit recovers a geometric sequence") {
    std::vector<double> d;
    for (int m = 0; m < 6; ++m) d.push_back(0.3 * std::pow(0.07, m));
    const auto f = fit_decay(d);
    CHECK(f.ratio == doctest::Approx(0.07).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.monotone);
    d[3] = d[1];
    CHECK_FALSE(fit_decay(d).monotone);
    d.push_back(0.0);
    CHECK(fit_decay(d).points == 6);
}

TEST_CASE("frequency envelope") {
    GridSpec g = small_grid(16, 2);
    g.period = 4 * std::numbers::pi;  // xi unit 1/2
    auto s = GaugeState::zero(g);
    const auto zero = envelope_diagnostic(s, 0.1);
    for (const auto& [k, c] : zero) CHECK(c == 0.0);

    // Single mode at |xi| = 2^1.
    s.phi = plane_wave(g, {4, 0, 0, 0}, 0.5);
    const double delta = 0.1;
    const auto env = envelope_diagnostic(s, delta);
    const double c1 = env.at(1);
    CHECK(c1 == doctest::Approx(2 * 0.5 * std::sqrt(g.volume())).epsilon(1e-12));
    for (const auto& [k, c] : env) CHECK(c == doctest::Approx(c1 * std::exp2(-delta * std::abs(k - 1))).epsilon(1e-12));

    // Slow variation, and the l^2 mass bounded by the hull inflation factor.
    DataSpec spec;
    spec.kmin = -1;
    spec.kmax = 2;
    const auto data = generate_data(g, spec);
    const auto e = envelope_diagnostic(data, delta);
    for (const auto& [k, ck] : e)
        for (const auto& [j, cj] : e) CHECK(ck / cj <= std::exp2(delta * std::abs(j - k)) * (1 + 1e-12));
    double c2 = 0;
    for (const auto& [k, c] : e) c2 += c * c;
    double infl = 0;
    for (int j = -40; j <= 40; ++j) infl += std::exp2(-delta * std::abs(j));
    const double en = energy_norm(data);
    INFO("envelope l2 " << std::sqrt(c2) << " data norm " << en);
    CHECK(std::sqrt(c2) <= infl * std::sqrt(2.0) * en);
    CHECK(std::sqrt(c2) >= 0.5 * en);
}
