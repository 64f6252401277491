#include "mkg/state.hpp"

#include <cmath>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"

namespace mkg {

namespace {

double sq(double x) { return x * x; }

double integral_sq(const SpatialField& f) { return sq(l2_norm(f)); }

SpatialField minus_im_phi_conj(const SpatialField& phi, const SpatialField& d) {
    SpatialField r(phi.grid, Parity::real);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = -std::imag(phi[i] * std::conj(d[i]));
    return r;
}

SpatialField remove_mean(const SpatialField& f) {
    auto r = f;
    const cplx m = mean(f);
    for (auto& x : r.v) x -= m;
    return r;
}

double rel_or_abs(double num, double den) { return den > 0 ? num / den : num; }

}  // namespace

GaugeState GaugeState::zero(const GridSpec& g) {
    GaugeState s;
    s.grid = g;
    s.A = zero_vector(g);
    s.dtA = zero_vector(g);
    s.A0 = SpatialField(g, Parity::real);
    s.dtA0 = SpatialField(g, Parity::real);
    s.phi = SpatialField(g);
    s.dtphi = SpatialField(g);
    return s;
}

void GaugeState::check_grid() const {
    auto chk = [&](const SpatialField& f) {
        if (!(f.grid == grid) || f.size() != grid.spatial_size()) throw GridMismatch("state component off-grid");
    };
    for (int d = 0; d < kDim; ++d) chk(A[d]), chk(dtA[d]);
    chk(A0), chk(dtA0), chk(phi), chk(dtphi);
}

SpatialField covariant_derivative(const GaugeState& s, int alpha) {
    if (alpha < 0 || alpha > kDim) throw InvalidArgument("alpha must lie in 0..4");
    const SpatialField& a = alpha == 0 ? s.A0 : s.A[alpha - 1];
    SpatialField d = alpha == 0 ? s.dtphi : partial(s.phi, alpha - 1);
    d.parity = Parity::complex;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += cplx(0, a[i].real()) * s.phi[i];
    return d;
}

Curvature curvature(const GaugeState& s) {
    Curvature F;
    const GridSpec& g = s.grid;
    for (auto& row : F)
        for (auto& f : row) f = SpatialField(g, Parity::real);
    for (int j = 1; j <= kDim; ++j) {
        F[0][j] = s.dtA[j - 1] - partial(s.A0, j - 1);
        F[j][0] = -1.0 * F[0][j];
        for (int i = 1; i < j; ++i) {
            F[i][j] = partial(s.A[j - 1], i - 1) - partial(s.A[i - 1], j - 1);
            F[j][i] = -1.0 * F[i][j];
        }
    }
    return F;
}

SpatialField charge_density(const SpatialField& phi, const SpatialField& dtphi, const SpatialField& A0) {
    SpatialField r(phi.grid, Parity::real);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const cplx d = dtphi[i] + cplx(0, A0[i].real()) * phi[i];
        r[i] = -std::imag(phi[i] * std::conj(d));
    }
    return r;
}

VectorField spatial_current(const SpatialField& phi, const VectorField& A) {
    VectorField J;
    for (int j = 0; j < kDim; ++j) {
        auto d = partial(phi, j);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += cplx(0, A[j][i].real()) * phi[i];
        J[j] = minus_im_phi_conj(phi, d);
    }
    return J;
}

CurrentDensity current(const GaugeState& s) {
    return {charge_density(s.phi, s.dtphi, s.A0), spatial_current(s.phi, s.A)};
}

EnergyReport energy(const GaugeState& s) {
    EnergyReport e;
    const auto F = curvature(s);
    for (int j = 1; j <= kDim; ++j) {
        e.field += 0.5 * integral_sq(F[0][j]);
        for (int i = 1; i < j; ++i) e.field += 0.5 * integral_sq(F[i][j]);
    }
    for (int a = 0; a <= kDim; ++a) e.matter += 0.5 * integral_sq(covariant_derivative(s, a));
    e.total = e.field + e.matter;
    return e;
}

GaugeState gauge_transform(const GaugeState& s, const GaugeFunction& g) {
    GaugeState r = s;
    for (int j = 0; j < kDim; ++j) {
        r.A[j] -= partial(g.chi, j);
        r.dtA[j] -= partial(g.dtchi, j);
    }
    r.A0 -= g.dtchi;
    r.dtA0 -= g.dttchi;
    for (std::size_t i = 0; i < r.phi.size(); ++i) {
        const cplx u = std::exp(cplx(0, g.chi[i].real()));
        r.phi[i] = u * s.phi[i];
        r.dtphi[i] = u * (s.dtphi[i] + cplx(0, g.dtchi[i].real()) * s.phi[i]);
    }
    return r;
}

namespace {

SpatialField rescale_field(const SpatialField& f, const GridSpec& g2, double amp, double tol) {
    const GridSpec& g = f.grid;
    const auto c = fft(f);
    double cut = 0;
    for (const auto& x : c.v) cut = std::max(cut, std::abs(x));
    cut *= tol;
    SpatialSpectrum c2(g2, f.parity);
    const int lim = std::min(g.n, g2.n) / 2;  // |n_i| < lim on both lattices
    std::size_t idx = 0;
    for (int a = 0; a < g.n; ++a)
        for (int b = 0; b < g.n; ++b)
            for (int e = 0; e < g.n; ++e)
                for (int h = 0; h < g.n; ++h, ++idx) {
                    const std::array<int, 4> n{signed_index(a, g.n), signed_index(b, g.n), signed_index(e, g.n),
                                               signed_index(h, g.n)};
                    bool ok = true;
                    for (int q : n) ok = ok && std::abs(q) < lim;
                    if (!ok) {
                        if (std::abs(c[idx]) > cut && c[idx] != cplx{})
                            throw InvalidArgument("companion grid unavailable: spectral content at |n_i| >= " +
                                                  std::to_string(lim));
                        continue;
                    }
                    c2[mode_index(g2, n)] = amp * c[idx];
                }
    return ifft(c2, f.parity);
}

}  // namespace

GaugeState rescale(const GaugeState& s, double lambda, double tol) {
    if (lambda != 2.0 && lambda != 0.5) throw InvalidArgument("rescale supports lambda = 2 or 1/2");
    const GridSpec g2 = s.grid.rescaled(lambda);
    GaugeState r;
    r.grid = g2;
    const double l1 = lambda, l2 = lambda * lambda;
    for (int d = 0; d < kDim; ++d) {
        r.A[d] = rescale_field(s.A[d], g2, l1, tol);
        r.dtA[d] = rescale_field(s.dtA[d], g2, l2, tol);
    }
    r.A0 = rescale_field(s.A0, g2, l1, tol);
    r.dtA0 = rescale_field(s.dtA0, g2, l2, tol);
    r.phi = rescale_field(s.phi, g2, l1, tol);
    r.dtphi = rescale_field(s.dtphi, g2, l2, tol);
    r.time = s.time / lambda;
    return r;
}

SpatialField solve_A0(const SpatialField& phi, const SpatialField& dtphi, const EllipticOptions& opt,
                      const SpatialField* guess) {
    SpatialField a0 = guess ? *guess : SpatialField(phi.grid, Parity::real);
    for (int it = 0; it < opt.max_iter; ++it) {
        const auto j0 = charge_density(phi, dtphi, a0);
        auto next = real_part(inv_laplacian(j0, ZeroMode::drop));
        const double change = l2_norm(next - a0);
        const double size = l2_norm(next);
        a0 = std::move(next);
        if (change <= opt.tol * size || size == 0) {
            const auto jf = charge_density(phi, dtphi, a0);
            if (opt.mean == MeanPolicy::reject && std::abs(mean(jf)) > 1e-10 * std::max(max_abs(jf), 1e-300))
                throw NonzeroMean("total charge is nonzero; Delta A0 = J_0 has no periodic solution");
            return a0;
        }
    }
    throw Error("EllipticSolveError", "A0 fixed point did not converge");
}

std::pair<SpatialField, SpatialField> elliptic_A0(const CurrentDensity& J, MeanPolicy mp) {
    const ZeroMode zm = mp == MeanPolicy::reject ? ZeroMode::error : ZeroMode::drop;
    try {
        auto a0 = real_part(inv_laplacian(J.J0, zm));
        auto da0 = real_part(inv_laplacian(divergence(J.J), ZeroMode::drop));
        return {a0, da0};
    } catch (const SingularSymbol&) {
        throw NonzeroMean("J_0 has nonzero mean; Delta A0 = J_0 has no periodic solution");
    }
}

GaugeState prepare_data(const VectorField& A, const VectorField& dtA, const SpatialField& phi,
                        const SpatialField& dtphi, const EllipticOptions& opt) {
    GaugeState s;
    s.grid = phi.grid;
    VectorField a, da;
    for (int d = 0; d < kDim; ++d) {
        a[d] = real_part(remove_mean(A[d]));
        da[d] = real_part(remove_mean(dtA[d]));
    }
    s.A = leray(a);
    s.dtA = leray(da);
    for (int d = 0; d < kDim; ++d) s.A[d] = real_part(s.A[d]), s.dtA[d] = real_part(s.dtA[d]);
    s.phi = remove_mean(phi);
    s.dtphi = remove_mean(dtphi);
    s.phi.parity = s.dtphi.parity = Parity::complex;
    s.A0 = solve_A0(s.phi, s.dtphi, opt);
    const auto J = spatial_current(s.phi, s.A);
    s.dtA0 = real_part(inv_laplacian(divergence(J), ZeroMode::drop));
    return s;
}

double coulomb_residual(const GaugeState& s) {
    double ga = 0, gd = 0;
    for (int d = 0; d < kDim; ++d)
        for (int e = 0; e < kDim; ++e) ga += sq(l2_norm(partial(s.A[d], e))), gd += sq(l2_norm(partial(s.dtA[d], e)));
    const double r1 = rel_or_abs(l2_norm(divergence(s.A)), std::sqrt(ga));
    const double r2 = rel_or_abs(l2_norm(divergence(s.dtA)), std::sqrt(gd));
    return std::max(r1, r2);
}

double a0_residual(const GaugeState& s) {
    const auto j0 = charge_density(s.phi, s.dtphi, s.A0);
    return rel_or_abs(l2_norm(laplacian(s.A0) - j0), l2_norm(j0));
}

double dta0_residual(const GaugeState& s) {
    const auto dj = divergence(spatial_current(s.phi, s.A));
    return rel_or_abs(l2_norm(laplacian(s.dtA0) - dj), l2_norm(dj));
}

double current_divergence_residual(const std::vector<GaugeState>& trace) {
    if (trace.size() < 3) throw InvalidArgument("current divergence residual needs at least 3 samples");
    const double dt = trace[1].time - trace[0].time;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (std::abs(trace[i].time - trace[i - 1].time - dt) > 1e-9 * std::abs(dt))
            throw InvalidArgument("trace is not uniformly sampled");
    std::vector<SpatialField> j0(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) j0[i] = charge_density(trace[i].phi, trace[i].dtphi, trace[i].A0);
    double worst = 0;
    for (std::size_t i = 1; i + 1 < trace.size(); ++i) {
        auto r = (1.0 / (2 * dt)) * (j0[i + 1] - j0[i - 1]);
        r -= divergence(spatial_current(trace[i].phi, trace[i].A));
        worst = std::max(worst, l2_norm(r));
    }
    return worst;
}

}  // namespace mkg
