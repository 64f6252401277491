#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mkg/random_data.hpp"
#include "mkg/snapshot.hpp"
#include "test_util.hpp"

using namespace mkg;

namespace {
std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("mkg_test_" + name)).string();
}
}  // namespace

TEST_CASE("MKGF round trip is bit exact") {
    GridSpec g;
    g.n = 4;
    g.nt = 3;
    const auto f = testutil::random_field(g, 7, false, 2.0, false);
    const auto path = tmp_path("f.mkgf");
    write_field(path, f);
    const auto r = read_spatial(path, g);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(r[i] == f[i]);
    CHECK(std::filesystem::file_size(path) == 4 + 2 + 2 + 4 * 8 + f.size() * 16);

    const auto F = testutil::random_spacetime(g, 3);
    write_field(path, F);
    const auto raw = read_mkgf(path);
    CHECK(raw.extents == std::vector<std::uint64_t>{3, 4, 4, 4, 4});
    const auto R = read_spacetime(path, g);
    for (std::size_t i = 0; i < F.size(); ++i) CHECK(R[i] == F[i]);

    GridSpec other = g;
    other.n = 8;
    CHECK_THROWS_AS(read_spacetime(path, other), GridMismatch);
    std::filesystem::remove(path);
}

TEST_CASE("MKGF rejects damaged files") {
    const auto path = tmp_path("bad.mkgf");
    {
        std::ofstream os(path, std::ios::binary);
        os << "MKGX";
    }
    CHECK_THROWS_AS(read_mkgf(path), Error);
    write_mkgf(path, {{2, 2}, std::vector<cplx>(4, 1.0)});
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    CHECK_THROWS_AS(read_mkgf(path), Error);
    CHECK_THROWS_AS(write_mkgf(path, {{2, 3}, std::vector<cplx>(4)}), InvalidArgument);
    std::filesystem::remove(path);
}

TEST_CASE("state save and load round trip") {
    GridSpec g;
    g.n = 8;
    DataSpec d;
    d.kmax = 1;
    auto s = generate_data(g, d);
    s.time = 0.25;
    const auto dir = tmp_path("state");
    save_state(dir, s);
    const auto r = load_state(dir);
    CHECK(r.grid == s.grid);
    CHECK(r.time == s.time);
    CHECK(r.phi.parity == Parity::complex);
    CHECK(r.A[0].parity == Parity::real);
    for (std::size_t i = 0; i < s.phi.size(); ++i) {
        CHECK(r.phi[i] == s.phi[i]);
        CHECK(r.A[2][i] == s.A[2][i]);
        CHECK(r.dtA0[i] == s.dtA0[i]);
    }
    std::filesystem::remove_all(dir);
}
