#include "mkg/nullforms.hpp"

#include <cmath>
#include <sstream>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"

namespace mkg {

namespace {

SpacetimeField mul(const SpacetimeField& a, const SpacetimeField& b) {
    a.check_same(b);
    SpacetimeField out(a.grid, a.parity == Parity::real && b.parity == Parity::real ? Parity::real : Parity::complex);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

void require_guarded(const SpacetimeField& f, double eta, const char* name) {
    double tau = 0, xi = 0;
    if (violates_guard(f, eta, &tau, &xi)) {
        std::ostringstream os;
        os << name << " has spectrum inside the cone guard (eta = " << eta << ") at tau = " << tau
           << ", |xi| = " << xi;
        throw ConeResonance(os.str(), tau, xi);
    }
}

double resolve_eta(const GridSpec& g, double eta) { return eta < 0 ? default_eta(g) : eta; }

// Specs of the bilinear current u_alpha = M_alpha(phi1, phi2).
BilinearSpec current_spec(CurrentForm form, int alpha) {
    BilinearSpec s;
    s.kind = form == CurrentForm::product ? BilinearKind::derivative_product : BilinearKind::im_current;
    s.alpha = alpha;
    return s;
}

// Several H_k outputs sharing the input localizations.
std::vector<SpacetimeField> hk_multi(const std::vector<BilinearSpec>& ms, const SpacetimeField& phi,
                                     const SpacetimeField& psi, int k, int C) {
    const auto& b = bank(phi.grid);
    std::vector<SpacetimeField> out(ms.size(), SpacetimeField(phi.grid));
    const auto pk_tab = b.pk_symbol(k);
    for (int j = b.j_min(); j <= std::min(k + C - 1, b.j_max()); ++j) {
        const auto a = q_less(phi, j - C);
        const auto c = q_less(psi, j - C);
        const auto qj_tab = b.qj_symbol(j);
        for (std::size_t n = 0; n < ms.size(); ++n) {
            auto s = fft(apply_bilinear(ms[n], a, c));
            multiply(s, qj_tab);
            const std::size_t ns = pk_tab.size();
            for (std::size_t i = 0; i < s.size(); ++i) s[i] *= pk_tab[i % ns];
            out[n] += ifft(s);
        }
    }
    return out;
}

// sum_k' H*_k'(X, P_{>k'+C} Y) with M the plain product.
SpacetimeField lowhi_wrap(const SpacetimeField& X, const SpacetimeField& Y, int C) {
    const auto& b = bank(X.grid);
    SpacetimeField out(X.grid);
    BilinearSpec prod;
    for (int kp = b.k_min(); kp + C + 1 <= b.k_max(); ++kp) {
        const auto Yh = p_geq(Y, kp + C + 1);
        out += hk_star(prod, X, Yh, kp, C);
    }
    return out;
}

SpacetimeField wrap(const SpacetimeField& X, const SpacetimeField& Y, bool localized, int C) {
    return localized ? lowhi_wrap(X, Y, C) : mul(X, Y);
}

}  // namespace

void BilinearSpec::validate() const {
    if ((kind == BilinearKind::derivative_product || kind == BilinearKind::im_current) && (alpha < 0 || alpha > kDim))
        throw InvalidArgument("alpha must lie in 0..4");
    if (kind == BilinearKind::nij && !(1 <= i && i < j && j <= kDim))
        throw InvalidArgument("N_ij needs spatial indices 1 <= i < j <= 4");
}

SpacetimeField st_partial(const SpacetimeField& f, int alpha) {
    if (alpha < 0 || alpha > kDim) throw InvalidArgument("alpha must lie in 0..4");
    return alpha == 0 ? partial_t(f) : partial(f, alpha - 1);
}

SpacetimeField nij(const SpacetimeField& phi, const SpacetimeField& psi, int i, int j) {
    if (i < 1 || j < 1 || i > kDim || j > kDim) throw InvalidArgument("N_ij needs spatial indices in 1..4");
    if (i == j) return SpacetimeField(phi.grid);
    return mul(st_partial(phi, i), st_partial(psi, j)) - mul(st_partial(phi, j), st_partial(psi, i));
}

SpacetimeField apply_bilinear(const BilinearSpec& m, const SpacetimeField& phi, const SpacetimeField& psi) {
    m.validate();
    switch (m.kind) {
        case BilinearKind::product:
            return mul(phi, psi);
        case BilinearKind::derivative_product:
            return mul(phi, st_partial(psi, m.alpha));
        case BilinearKind::im_current: {
            const auto d = st_partial(psi, m.alpha);
            SpacetimeField out(phi.grid, Parity::real);
            for (std::size_t x = 0; x < out.size(); ++x) out[x] = (phi[x] * std::conj(d[x])).imag();
            return out;
        }
        case BilinearKind::nij:
            return nij(phi, psi, m.i, m.j);
        case BilinearKind::q0: {
            auto out = mul(partial_t(phi), partial_t(psi));
            for (int d = 0; d < kDim; ++d) out -= mul(partial(phi, d), partial(psi, d));
            return out;
        }
    }
    return {};
}

LerayNullform leray_as_nullform(const SpacetimeField& phi, const SpacetimeField& psi) {
    LerayNullform r;
    VectorSpacetimeField v;
    for (int d = 0; d < kDim; ++d) v[d] = mul(phi, partial(psi, d));
    r.direct = leray(v);
    for (auto& c : r.direct) {
        // Leray keeps the zero mode; drop it to compare with Delta^{-1}.
        auto s = fft(c);
        const std::size_t ns = c.grid.spatial_size();
        for (int m = 0; m < c.grid.nt; ++m) s[m * ns] = 0;
        c = ifft(s, c.parity);
    }
    for (int j = 1; j <= kDim; ++j) {
        SpacetimeField acc(phi.grid);
        for (int i = 1; i <= kDim; ++i)
            if (i != j) acc += partial(nij(phi, psi, i, j), i - 1);
        r.nullform[j - 1] = inv_laplacian(acc, ZeroMode::drop);
    }
    return r;
}

SpacetimeField hk(const BilinearSpec& m, const SpacetimeField& phi, const SpacetimeField& psi, int k, int C) {
    phi.check_same(psi);
    return hk_multi({m}, phi, psi, k, C)[0];
}

SpacetimeField hk_star(const BilinearSpec& m, const SpacetimeField& phi, const SpacetimeField& psi, int k, int C) {
    phi.check_same(psi);
    const auto& b = bank(phi.grid);
    SpacetimeField out(phi.grid);
    const auto phik = pk(phi, k);
    for (int j = b.j_min(); j <= std::min(k + C - 1, b.j_max()); ++j) {
        const auto a = qj(phik, j);
        const auto c = q_less(psi, j - C);
        out += q_less(apply_bilinear(m, a, c), j - C);
    }
    return out;
}

SpacetimeField identity_guard(const SpacetimeField& F, double eta) {
    const GridSpec& g = F.grid;
    eta = resolve_eta(g, eta);
    auto c = fft(F);
    const auto& mod = bank(g).modulation();
    for_each_spacetime_mode(g, [&](std::size_t i, double tf, double td, const Vec4& xf, const Vec4& xd) {
        bool drop = mod[i] < eta || norm(xf) == 0 || tf != td;
        for (int d = 0; d < kDim && !drop; ++d) drop = xf[d] != xd[d];
        if (drop) c[i] = 0;
    });
    return ifft(c, F.parity);
}

std::array<SpacetimeField, 5> bilinear_current(const SpacetimeField& phi1, const SpacetimeField& phi2,
                                               CurrentForm form, double eta, int C) {
    phi1.check_same(phi2);
    const GridSpec& g = phi1.grid;
    eta = resolve_eta(g, eta);
    std::vector<BilinearSpec> specs;
    for (int a = 0; a <= kDim; ++a) specs.push_back(current_spec(form, a));
    std::array<SpacetimeField, 5> u;
    if (C < 0) {
        for (int a = 0; a <= kDim; ++a) u[a] = apply_bilinear(specs[a], phi1, phi2);
    } else {
        for (auto& x : u) x = SpacetimeField(g);
        const auto& b = bank(g);
        for (int k = b.k_min(); k + C + 1 <= b.k_max(); ++k) {
            const auto h = hk_multi(specs, p_geq(phi1, k + C + 1), p_geq(phi2, k + C + 1), k, C);
            for (int a = 0; a <= kDim; ++a) u[a] += h[a];
        }
    }
    for (auto& x : u) x = identity_guard(x, eta);
    return u;
}

Trilinear q1q2q3(const SpacetimeField& phi1, const SpacetimeField& phi2, const SpacetimeField& phi3,
                 bool localized, int C, double eta, CurrentForm form) {
    const GridSpec& g = phi1.grid;
    eta = resolve_eta(g, eta);
    require_guarded(phi1, eta, "phi1");
    require_guarded(phi2, eta, "phi2");
    require_guarded(phi3, eta, "phi3");
    const auto u = bilinear_current(phi1, phi2, form, eta, localized ? C : -1);

    std::array<SpacetimeSpectrum, 5> uh;
    for (int a = 0; a <= kDim; ++a) uh[a] = fft(u[a]);
    std::array<SpacetimeSpectrum, 5> x1, x3;
    for (auto& s : x1) s = SpacetimeSpectrum(g);
    for (auto& s : x3) s = SpacetimeSpectrum(g);
    SpacetimeSpectrum x2(g);
    const cplx I(0, 1);
    for_each_spacetime_mode(g, [&](std::size_t i, double tau, double, const Vec4& xi, const Vec4&) {
        const double r2 = dot(xi, xi);
        const double boxs = tau * tau - r2;
        if (r2 == 0 || boxs == 0) return;
        const double S = 1.0 / (-r2 * boxs);  // Delta^{-1} box^{-1}
        cplx div = 0;
        for (int d = 0; d < kDim; ++d) div += I * xi[d] * uh[d + 1][i];
        for (int a = 0; a <= kDim; ++a) x1[a][i] = uh[a][i] / boxs;
        x2[i] = S * (I * tau) * (I * tau * uh[0][i] - div);
        x3[0][i] = S * (I * tau) * div;
        for (int d = 0; d < kDim; ++d) x3[d + 1][i] = S * (I * xi[d]) * div;
    });

    // d^alpha phi3: d_t and -d_i.
    std::array<SpacetimeField, 5> up;
    up[0] = partial_t(phi3);
    for (int d = 0; d < kDim; ++d) up[d + 1] = -1.0 * partial(phi3, d);

    Trilinear t;
    t.q1 = SpacetimeField(g);
    t.q3 = SpacetimeField(g);
    for (int a = 0; a <= kDim; ++a) {
        t.q1 += wrap(ifft(x1[a]), up[a], localized, C);
        t.q3 += wrap(ifft(x3[a]), up[a], localized, C);
    }
    t.q2 = wrap(ifft(x2), up[0], localized, C);
    return t;
}

SpacetimeField connection_nullform(const SpacetimeField& phi1, const SpacetimeField& phi2,
                                   const SpacetimeField& phi3, bool localized, int C, double eta,
                                   CurrentForm form) {
    const GridSpec& g = phi1.grid;
    eta = resolve_eta(g, eta);
    require_guarded(phi1, eta, "phi1");
    require_guarded(phi2, eta, "phi2");
    require_guarded(phi3, eta, "phi3");
    auto u = bilinear_current(phi1, phi2, form, eta, localized ? C : -1);
    const auto A0 = -1.0 * inv_laplacian(u[0], ZeroMode::drop);
    VectorSpacetimeField ux{u[1], u[2], u[3], u[4]};
    auto Ax = leray(ux);
    SpacetimeField out = wrap(A0, partial_t(phi3), localized, C);
    for (int d = 0; d < kDim; ++d) {
        const auto Ai = -1.0 * inv_box(identity_guard(Ax[d], eta), eta);
        // A^i = -A_i
        out -= wrap(Ai, partial(phi3, d), localized, C);
    }
    return out;
}

HAResult ha_extraction(const SpacetimeField& phi, int C, double eta) {
    const GridSpec& g = phi.grid;
    eta = resolve_eta(g, eta);
    auto build = [&](int c) {
        const auto u = bilinear_current(phi, phi, CurrentForm::im_current, eta, c);
        VectorSpacetimeField ux{u[1], u[2], u[3], u[4]};
        auto a = leray(ux);
        for (auto& x : a) x = -1.0 * inv_box(identity_guard(x, eta), eta);
        return a;
    };
    HAResult r;
    r.full = build(-1);
    r.ha = build(C);
    for (int d = 0; d < kDim; ++d) r.good[d] = r.full[d] - r.ha[d];
    return r;
}

IdentityReport appendix_identity_check(const SpacetimeField& phi, double eta) {
    IdentityReport rep;
    rep.eta = resolve_eta(phi.grid, eta);
    const auto lhs = connection_nullform(phi, phi, phi, false, 0, rep.eta, CurrentForm::im_current);
    const auto t = q1q2q3(phi, phi, phi, false, 0, rep.eta, CurrentForm::im_current);
    auto rhs = t.q2 + t.q3;
    rhs -= t.q1;
    rep.lhs_norm = l2_norm(lhs);
    rep.rhs_norm = l2_norm(rhs);
    const double d = l2_norm(lhs - rhs);
    rep.residual = rep.lhs_norm > 0 ? d / rep.lhs_norm : d;
    return rep;
}

}  // namespace mkg
