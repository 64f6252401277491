#include "mkg/sectors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "mkg/fft.hpp"

namespace mkg {

namespace {

Vec4 normalized(const Vec4& v) {
    const double r = norm(v);
    return {v[0] / r, v[1] / r, v[2] / r, v[3] / r};
}

std::vector<Vec4> cell600_vertices() {
    const double phi = std::numbers::phi;
    std::vector<Vec4> v;
    for (int a = 0; a < 4; ++a)
        for (int s : {-1, 1}) {
            Vec4 x{};
            x[a] = s;
            v.push_back(x);
        }
    for (int m = 0; m < 16; ++m)
        v.push_back({(m & 1) ? 0.5 : -0.5, (m & 2) ? 0.5 : -0.5, (m & 4) ? 0.5 : -0.5, (m & 8) ? 0.5 : -0.5});
    // Even permutations of (1/2)(+-phi, +-1, +-1/phi, 0).
    const double base[4] = {phi / 2, 0.5, 0.5 / phi, 0.0};
    std::array<int, 4> p{0, 1, 2, 3};
    do {
        int inv = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) inv += p[i] > p[j];
        if (inv % 2) continue;
        for (int m = 0; m < 8; ++m) {
            double s[3] = {(m & 1) ? -1.0 : 1.0, (m & 2) ? -1.0 : 1.0, (m & 4) ? -1.0 : 1.0};
            Vec4 x{};
            for (int i = 0; i < 4; ++i) {
                const int b = p[i];
                x[i] = b < 3 ? s[b] * base[b] : 0.0;
            }
            v.push_back(x);
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return v;
}

using Tet = std::array<std::size_t, 4>;

std::vector<Tet> cell600_tets(const std::vector<Vec4>& v) {
    const std::size_t n = v.size();
    const double edge_dot = std::numbers::phi / 2;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (a != b && std::abs(dot(v[a], v[b]) - edge_dot) < 1e-9) adj[a][b] = true;
    std::vector<Tet> tets;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            if (!adj[a][b]) continue;
            for (std::size_t c = b + 1; c < n; ++c) {
                if (!adj[a][c] || !adj[b][c]) continue;
                for (std::size_t d = c + 1; d < n; ++d)
                    if (adj[a][d] && adj[b][d] && adj[c][d]) tets.push_back({a, b, c, d});
            }
        }
    return tets;
}

void refine(std::vector<Vec4>& v, std::vector<Tet>& tets) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> mid;
    auto midpoint = [&](std::size_t a, std::size_t b) {
        const auto key = std::minmax(a, b);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        Vec4 m{};
        for (int i = 0; i < 4; ++i) m[i] = v[a][i] + v[b][i];
        v.push_back(normalized(m));
        mid.emplace(key, v.size() - 1);
        return v.size() - 1;
    };
    std::vector<Tet> out;
    out.reserve(tets.size() * 8);
    for (const auto& t : tets) {
        // Edge midpoints indexed by vertex pair.
        std::size_t m[4][4];
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) m[i][j] = m[j][i] = midpoint(t[i], t[j]);
        for (int i = 0; i < 4; ++i) {
            Tet c{t[i], 0, 0, 0};
            int q = 1;
            for (int j = 0; j < 4; ++j)
                if (j != i) c[q++] = m[i][j];
            out.push_back(c);
        }
        // Split the inner octahedron along its shortest diagonal.
        const std::array<std::array<int, 4>, 3> diag{{{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}}};
        int best = 0;
        double bd = -2;
        for (int k = 0; k < 3; ++k) {
            const auto& d = diag[k];
            const double c = dot(v[m[d[0]][d[1]]], v[m[d[2]][d[3]]]);
            if (c > bd) bd = c, best = k;
        }
        const auto& d = diag[best];
        const std::size_t p = m[d[0]][d[1]], q = m[d[2]][d[3]];
        // Ring: midpoints of the four edges joining {d0,d1} to {d2,d3}, ordered cyclically.
        const std::size_t ring[4] = {m[d[0]][d[2]], m[d[2]][d[1]], m[d[1]][d[3]], m[d[3]][d[0]]};
        for (int k = 0; k < 4; ++k) out.push_back({p, q, ring[k], ring[(k + 1) % 4]});
    }
    tets.swap(out);
}

double exp_bump(double x) {
    if (x >= 1) return 0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

}  // namespace

double angle_between(const Vec4& a, const Vec4& b) {
    Vec4 s{}, d{};
    for (int i = 0; i < 4; ++i) s[i] = a[i] + b[i], d[i] = a[i] - b[i];
    return 2.0 * std::atan2(norm(d), norm(s));
}

SectorSet SectorSet::make(int l) {
    if (l > 0 || l < -3) throw InvalidArgument("sector aperture exponent must lie in [-3, 0]");
    SectorSet s;
    s.l_ = l;
    s.dirs_ = cell600_vertices();
    auto tets = cell600_tets(s.dirs_);
    for (int r = 0; r > l; --r) refine(s.dirs_, tets);
    // Edge angle of the 600-cell is pi/5; refinement halves it.
    s.rho_ = std::numbers::pi / 5 * std::ldexp(1.0, l);
    const std::size_t n = s.dirs_.size();
    s.antipode_.assign(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (dot(s.dirs_[a], s.dirs_[b]) < -1 + 1e-12) {
                s.antipode_[a] = b;
                break;
            }
    return s;
}

double SectorSet::bump(std::size_t w, const Vec4& u) const {
    return exp_bump(angle_between(dirs_[w], u) / rho_);
}

std::vector<std::pair<std::size_t, double>> SectorSet::cutoffs(const Vec4& u) const {
    std::vector<std::pair<std::size_t, double>> out;
    const double cmin = std::cos(rho_);
    double s2 = 0;
    for (std::size_t w = 0; w < dirs_.size(); ++w) {
        if (dot(dirs_[w], u) <= cmin) continue;
        const double b = bump(w, u);
        if (b > 0) {
            out.emplace_back(w, b);
            s2 += b * b;
        }
    }
    if (s2 == 0) throw Error("SectorCoverError", "direction not covered by any sector");
    const double inv = 1.0 / std::sqrt(s2);
    for (auto& e : out) e.second *= inv;
    return out;
}

const SectorTable& sector_table(const GridSpec& g, const SectorSet& s) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, int>, std::unique_ptr<SectorTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    const auto key = std::make_tuple(g.n, g.period, s.aperture_exponent());
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto t = std::make_unique<SectorTable>();
    t->grid = g;
    t->l = s.aperture_exponent();
    t->entries.resize(s.size());
    for_each_mode(g, [&](std::size_t i, const Vec4& xi, const Vec4&) {
        const double r = norm(xi);
        if (r == 0) return;
        for (const auto& [w, c] : s.cutoffs({xi[0] / r, xi[1] / r, xi[2] / r, xi[3] / r}))
            t->entries[w].emplace_back(i, c);
    });
    return *cache.emplace(key, std::move(t)).first->second;
}

SpatialSpectrum sector_project(const SpatialSpectrum& c, const SectorSet& s, std::size_t w) {
    if (w >= s.size()) throw InvalidArgument("sector index out of range");
    const auto& t = sector_table(c.grid, s);
    SpatialSpectrum out(c.grid, Parity::complex);
    for (const auto& [i, v] : t.entries[w]) out[i] = v * c[i];
    return out;
}

SpatialField sector_project(const SpatialField& f, const SectorSet& s, std::size_t w) {
    return ifft(sector_project(fft(f), s, w), Parity::complex);
}

}  // namespace mkg
