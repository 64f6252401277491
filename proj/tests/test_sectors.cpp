#include <cmath>
#include <random>

#include "doctest.h"
#include "mkg/sectors.hpp"
#include "test_util.hpp"

using namespace mkg;

namespace {
Vec4 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Vec4 v{nd(rng), nd(rng), nd(rng), nd(rng)};
    const double r = norm(v);
    for (auto& x : v) x /= r;
    return v;
}
}  // namespace

TEST_CASE("sector sets: sizes, unit directions, central symmetry") {
    const std::size_t expect[3] = {120, 840, 6480};
    for (int l = 0; l >= -2; --l) {
        const auto s = SectorSet::make(l);
        CHECK(s.size() == expect[-l]);
        for (std::size_t w = 0; w < s.size(); ++w) {
            CHECK(std::abs(norm(s.directions()[w]) - 1) < 1e-14);
            REQUIRE(s.antipode(w) < s.size());
        }
    }
    CHECK_THROWS_AS(SectorSet::make(1), InvalidArgument);
}

TEST_CASE("sector cutoffs: square partition and finite overlap") {
    std::mt19937_64 rng(3);
    for (int l = 0; l >= -2; --l) {
        const auto s = SectorSet::make(l);
        std::size_t max_overlap = 0;
        for (int i = 0; i < 2000; ++i) {
            const auto u = random_unit(rng);
            const auto c = s.cutoffs(u);
            double s2 = 0;
            for (const auto& [w, v] : c) {
                s2 += v * v;
                CHECK(angle_between(s.directions()[w], u) < s.support());
            }
            CHECK(std::abs(s2 - 1) < 1e-14);
            max_overlap = std::max(max_overlap, c.size());
        }
        CHECK(max_overlap <= 40);
    }
}

TEST_CASE("sector_project examples") {
    GridSpec g;
    g.n = 8;
    const auto s = SectorSet::make(0);
    // Mode along a listed direction (e1): weight equals the normalized cutoff at the centre.
    const auto e = plane_wave(g, {2, 0, 0, 0});
    std::size_t w0 = 0;
    for (std::size_t w = 0; w < s.size(); ++w)
        if (dot(s.directions()[w], {1, 0, 0, 0}) > 1 - 1e-12) w0 = w;
    const auto c = s.cutoffs({1, 0, 0, 0});
    double cw = 0;
    for (const auto& [w, v] : c)
        if (w == w0) cw = v;
    CHECK(cw > 0.5);
    CHECK(testutil::rel(sector_project(e, s, w0), cw * e) < 1e-13);
    // Sectors whose cap misses the mode return zero.
    for (std::size_t w = 0; w < s.size(); ++w)
        if (angle_between(s.directions()[w], {1, 0, 0, 0}) > s.support())
            CHECK(max_abs(sector_project(e, s, w)) < 1e-15);
}

TEST_CASE("sector energies sum to the total") {
    GridSpec g;
    g.n = 8;
    const auto f = testutil::random_field(g, 21, true, 1e9, true);
    for (int l : {0, -1}) {
        const auto s = SectorSet::make(l);
        // Quadrature oracle on the spectrum: sum_w sum_xi |c_w(xi) f(xi)|^2.
        const auto F = fft(f);
        double total = 0;
        for (std::size_t w = 0; w < s.size(); ++w) total += std::pow(l2_norm(sector_project(F, s, w)), 2);
        CHECK(std::abs(total / std::pow(l2_norm(f), 2) - 1) < 1e-12);
    }
}
