#include "mkg/norms.hpp"

#include <cmath>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"

namespace mkg {

bool strichartz_admissible(double q, double r) {
    if (!(q >= 2) || !(r >= 2)) return false;
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    const double ir = std::isinf(r) ? 0.0 : 1.0 / r;
    return iq + 1.5 * ir <= 0.75 + 1e-15;
}

namespace {

double lr_of_slice(const std::vector<double>& mod2, std::size_t off, std::size_t n, double r, double cell) {
    if (std::isinf(r)) {
        double m = 0;
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, mod2[off + i]);
        return std::sqrt(m);
    }
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(mod2[off + i], 0.5 * r);
    return std::pow(s * cell, 1.0 / r);
}

double lqlr_mod2(const std::vector<double>& mod2, const GridSpec& g, double q, double r) {
    const std::size_t ns = g.spatial_size();
    double acc = 0;
    for (int m = 0; m < g.nt; ++m) {
        const double v = lr_of_slice(mod2, m * ns, ns, r, g.cell_volume());
        if (std::isinf(q))
            acc = std::max(acc, v);
        else
            acc += std::pow(v, q);
    }
    return std::isinf(q) ? acc : std::pow(acc * g.dt(), 1.0 / q);
}

}  // namespace

double lqlr(const std::vector<SpacetimeField>& F, double q, double r) {
    if (F.empty()) return 0;
    std::vector<double> mod2(F[0].size(), 0.0);
    for (const auto& c : F) {
        F[0].check_same(c);
        for (std::size_t i = 0; i < c.size(); ++i) mod2[i] += std::norm(c[i]);
    }
    return lqlr_mod2(mod2, F[0].grid, q, r);
}

double lqlr(const SpacetimeField& F, double q, double r) { return lqlr(std::vector<SpacetimeField>{F}, q, r); }

double strichartz_norm(const std::vector<SpacetimeField>& F, double q, double r, int k) {
    if (!strichartz_admissible(q, r))
        throw InvalidArgument("Strichartz pair (q, r) = (" + std::to_string(q) + ", " + std::to_string(r) +
                              ") is not admissible");
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    const double ir = std::isinf(r) ? 0.0 : 1.0 / r;
    return std::exp2((iq + 4 * ir - 2) * k) * lqlr(F, q, r);
}

double strichartz_norm(const SpacetimeField& F, double q, double r, int k) {
    return strichartz_norm(std::vector<SpacetimeField>{F}, q, r, k);
}

NormReport xsb_norm(const std::vector<SpacetimeField>& F, double s, double r, double p) {
    NormReport rep;
    rep.id = "X^{" + std::to_string(s) + "," + std::to_string(r) + "}_" + (std::isinf(p) ? "inf" : std::to_string(p));
    rep.summation = "l2";
    if (F.empty()) return rep;
    const GridSpec& g = F[0].grid;
    const auto& b = bank(g);
    const auto& rad = b.radius();
    const auto& mod = b.modulation();
    const std::size_t ns = g.spatial_size();
    // |F^|^2 summed over components, after the taper.
    std::vector<double> spec2(F[0].size(), 0.0);
    for (const auto& c : F) {
        const auto h = fft(apply_taper(c));
        for (std::size_t i = 0; i < h.size(); ++i) spec2[i] += std::norm(h[i]);
    }
    const double vol = g.volume() * g.window;
    const int j0 = b.j_min(), j1 = b.j_max();
    const int k0 = b.k_min(), k1 = b.k_max();
    const int nj = j1 - j0 + 1;
    // bins[k][j] = sum |chi_k chi_j F^|^2; chi(x) vanishes off (1/2, 2), so at most
    // two dyadic indices contribute per variable.
    std::vector<double> bins(std::size_t(k1 - k0 + 1) * nj, 0.0);
    for (std::size_t i = 0; i < spec2.size(); ++i) {
        if (spec2[i] == 0) continue;
        const double ra = rad[i % ns], mo = mod[i];
        if (ra == 0 || mo == 0) continue;
        const int kb = int(std::floor(std::log2(ra))), jb = int(std::floor(std::log2(mo)));
        for (int k = kb; k <= kb + 1; ++k) {
            if (k < k0 || k > k1) continue;
            const double pk = lp::chi(ra * std::ldexp(1.0, -k));
            if (pk == 0) continue;
            for (int j = jb; j <= jb + 1; ++j) {
                if (j < j0 || j > j1) continue;
                const double qj = lp::chi(mo * std::ldexp(1.0, -j));
                if (qj != 0) bins[std::size_t(k - k0) * nj + (j - j0)] += pk * pk * qj * qj * spec2[i];
            }
        }
    }
    double agg = 0;
    for (int k = k0; k <= k1; ++k) {
        double acc = 0;
        for (int j = j0; j <= j1; ++j) {
            const double v = std::exp2(r * j) * std::sqrt(bins[std::size_t(k - k0) * nj + (j - j0)] * vol);
            if (std::isinf(p))
                acc = std::max(acc, v);
            else
                acc += std::pow(v, p);
        }
        const double val = std::exp2(s * k) * (std::isinf(p) ? acc : std::pow(acc, 1.0 / p));
        rep.per_k[k] = val;
        agg += val * val;
    }
    rep.aggregate = std::sqrt(agg);
    return rep;
}

NormReport xsb_norm(const SpacetimeField& F, double s, double r, double p) {
    return xsb_norm(std::vector<SpacetimeField>{F}, s, r, p);
}

std::vector<double> fd_weights(const std::vector<double>& x, int order) {
    // Fornberg's recursion for weights at z = 0.
    const int n = int(x.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(order + 1, 0.0));
    double c1 = 1, c4 = x[0];
    c[0][0] = 1;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1;
        const double c5 = c4;
        c4 = x[i];
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i) w[i] = c[i][order];
    return w;
}

namespace {

SpacetimeField fd_time_derivative(const SpacetimeField& F, int order) {
    const GridSpec& g = F.grid;
    const int nt = g.nt;
    const int width = order == 2 ? 6 : 5;  // one-sided stencils keep fourth order
    if (nt < width) throw InvalidArgument("too few time samples for a fourth-order stencil");
    const std::size_t ns = g.spatial_size();
    const double h = g.dt();
    SpacetimeField out(g, F.parity);
    for (int m = 0; m < nt; ++m) {
        std::vector<int> idx;
        if (m >= 2 && m + 2 < nt) {
            idx = {m - 2, m - 1, m, m + 1, m + 2};
        } else {
            const int start = m < 2 ? 0 : nt - width;
            for (int q = 0; q < width; ++q) idx.push_back(start + q);
        }
        std::vector<double> nodes;
        for (int q : idx) nodes.push_back(double(q - m));
        auto w = fd_weights(nodes, order);
        for (auto& x : w) x /= std::pow(h, order);
        for (std::size_t i = 0; i < ns; ++i) {
            cplx s = 0;
            for (std::size_t q = 0; q < idx.size(); ++q) s += w[q] * F[idx[q] * ns + i];
            out[m * ns + i] = s;
        }
    }
    return out;
}

}  // namespace

SpacetimeField fd_second_derivative(const SpacetimeField& F) { return fd_time_derivative(F, 2); }
SpacetimeField fd_first_derivative(const SpacetimeField& F) { return fd_time_derivative(F, 1); }

NormReport dyadic_l1_norm(const SpacetimeField& f, double weight_exp) {
    NormReport rep;
    rep.id = "l1 2^{" + std::to_string(weight_exp) + "k} L2L2";
    rep.summation = "l1";
    rep.clipped = true;
    const GridSpec& g = f.grid;
    const auto& b = bank(g);
    const auto& rad = b.radius();
    const std::size_t ns = g.spatial_size();
    std::vector<SpatialSpectrum> sl(g.nt);
    for (int m = 0; m < g.nt; ++m) sl[m] = fft(time_slice(f, m));
    for (int k = b.k_min(); k <= b.k_max(); ++k) {
        const double sk = std::ldexp(1.0, -k);
        double s2 = 0;
        for (int m = 0; m < g.nt; ++m)
            for (std::size_t i = 0; i < ns; ++i) {
                const double c = lp::chi(rad[i] * sk);
                if (c != 0) s2 += c * c * std::norm(sl[m][i]);
            }
        const double v = std::exp2(weight_exp * k) * std::sqrt(s2 * g.volume() * g.dt());
        rep.per_k[k] = v;
        rep.aggregate += v;
    }
    return rep;
}

NormReport himod_norm(const SpacetimeField& F) {
    auto boxF = laplacian(F);
    boxF -= fd_second_derivative(F);
    auto rep = dyadic_l1_norm(boxF, -0.5);
    rep.id = "himod";
    return rep;
}

}  // namespace mkg
