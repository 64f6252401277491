#include "mkg/wave.hpp"

#include <cmath>
#include <string>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"

namespace mkg {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::spectral_exact: return "spectral_exact";
        case Scheme::leapfrog: return "leapfrog";
        case Scheme::trigonometric: return "trigonometric";
    }
    return "?";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "spectral_exact") return Scheme::spectral_exact;
    if (s == "leapfrog") return Scheme::leapfrog;
    if (s == "trigonometric") return Scheme::trigonometric;
    throw InvalidArgument("unknown scheme '" + s + "'");
}

namespace {

void propagate_spectra(SpatialSpectrum& g, SpatialSpectrum& h, const std::vector<double>& r, double t) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = r[i];
        const cplx a = g[i], b = h[i];
        if (w == 0) {
            g[i] = a + t * b;
            continue;
        }
        const double c = std::cos(t * w), s = std::sin(t * w);
        g[i] = c * a + (s / w) * b;
        h[i] = -w * s * a + c * b;
    }
}

}  // namespace

std::pair<SpatialField, SpatialField> free_propagate(const SpatialField& g, const SpatialField& h, double t) {
    g.check_same(h);
    auto cg = fft(g), ch = fft(h);
    propagate_spectra(cg, ch, bank(g.grid).radius(), t);
    const Parity p = (g.parity == Parity::real && h.parity == Parity::real) ? Parity::real : Parity::complex;
    return {ifft(cg, p), ifft(ch, p)};
}

void free_propagate(VectorField& a, VectorField& da, double t) {
    for (int d = 0; d < kDim; ++d) {
        auto [x, v] = free_propagate(a[d], da[d], t);
        a[d] = std::move(x);
        da[d] = std::move(v);
    }
}

SpatialField half_wave(const SpatialField& f, int sign, double t) {
    auto c = fft(f);
    const auto& r = bank(f.grid).radius();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= std::exp(cplx(0, sign * t * r[i]));
    return ifft(c, Parity::complex);
}

namespace {

std::vector<SpatialSpectrum> spatial_spectra(const SpacetimeField& f) {
    std::vector<SpatialSpectrum> out(f.grid.nt);
    for (int m = 0; m < f.grid.nt; ++m) out[m] = fft(time_slice(f, m));
    return out;
}

SpacetimeField from_spectra(const std::vector<SpatialSpectrum>& c, const GridSpec& g, Parity p) {
    SpacetimeField out(g, p);
    for (int m = 0; m < g.nt; ++m) set_time_slice(out, m, ifft(c[m], p));
    return out;
}

std::vector<SpatialSpectrum> duhamel_spectra(const std::vector<SpatialSpectrum>& fh, const GridSpec& g, int sign) {
    if (sign != 1 && sign != -1) throw InvalidArgument("duhamel sign must be +1 or -1");
    const int nt = g.nt;
    if (nt < 3) throw InvalidArgument("duhamel needs at least 3 time samples");
    const double h = g.dt();
    const auto& r = bank(g).radius();
    const std::size_t ns = g.spatial_size();
    std::vector<SpatialSpectrum> u(nt, SpatialSpectrum(g));
    for (std::size_t i = 0; i < ns; ++i) {
        const cplx e1 = std::exp(cplx(0, sign * h * r[i]));
        const cplx e2 = e1 * e1;
        u[1][i] = h * ((5.0 / 12.0) * e1 * fh[0][i] + (8.0 / 12.0) * fh[1][i] - (1.0 / 12.0) * std::conj(e1) * fh[2][i]);
        for (int m = 0; m + 2 < nt; ++m)
            u[m + 2][i] = e2 * u[m][i] + (h / 3.0) * (e2 * fh[m][i] + 4.0 * e1 * fh[m + 1][i] + fh[m + 2][i]);
    }
    return u;
}

}  // namespace

SpacetimeField duhamel(const SpacetimeField& f, int sign) {
    return from_spectra(duhamel_spectra(spatial_spectra(f), f.grid, sign), f.grid, Parity::complex);
}

std::pair<SpacetimeField, SpacetimeField> solve_box_with_velocity(const SpacetimeField& f, const SpatialField& g,
                                                                  const SpatialField& h) {
    const GridSpec& gr = f.grid;
    if (!gr.same_space(g.grid) || !gr.same_space(h.grid)) throw GridMismatch("data and source grids differ");
    auto fh = spatial_spectra(f);
    double mx = 0, m0 = 0;
    for (const auto& c : fh) {
        for (const auto& x : c.v) mx = std::max(mx, std::abs(x));
        m0 = std::max(m0, std::abs(c[0]));
    }
    if (m0 > kOccupancy * mx && m0 > 0) throw NonzeroMean("solve_box source has a nonzero spatial mean");
    const auto kp = duhamel_spectra(fh, gr, +1);
    const auto km = duhamel_spectra(fh, gr, -1);
    const auto& r = bank(gr).radius();
    const auto g0 = fft(g), h0 = fft(h);
    std::vector<SpatialSpectrum> phi(gr.nt), vel(gr.nt);
    for (int m = 0; m < gr.nt; ++m) {
        auto a = g0, b = h0;
        propagate_spectra(a, b, r, m * gr.dt());
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (r[i] == 0) continue;
            a[i] += cplx(0, 0.5) / r[i] * (kp[m][i] - km[m][i]);
            b[i] += -0.5 * (kp[m][i] + km[m][i]);
        }
        phi[m] = std::move(a);
        vel[m] = std::move(b);
    }
    const bool real = f.parity == Parity::real && g.parity == Parity::real && h.parity == Parity::real;
    const Parity p = real ? Parity::real : Parity::complex;
    return {from_spectra(phi, gr, p), from_spectra(vel, gr, p)};
}

SpacetimeField solve_box(const SpacetimeField& f, const SpatialField& g, const SpatialField& h) {
    return solve_box_with_velocity(f, g, h).first;
}

// ---------------------------------------------------------------------------

Background frozen_background(const GaugeState& s) {
    BackgroundSample b{s.A, s.A0, s.dtA0};
    return [b](double) { return b; };
}

Background trace_background(std::vector<GaugeState> states) {
    if (states.empty()) throw InvalidArgument("empty background trace");
    return [st = std::move(states)](double t) {
        if (st.size() == 1) return BackgroundSample{st[0].A, st[0].A0, st[0].dtA0};
        const double t0 = st.front().time, dt = st[1].time - st[0].time;
        double x = (t - t0) / dt;
        x = std::clamp(x, 0.0, double(st.size() - 1));
        std::size_t i = std::min(std::size_t(x), st.size() - 2);
        const double w = x - double(i);
        const auto& a = st[i];
        const auto& b = st[i + 1];
        BackgroundSample s;
        for (int d = 0; d < kDim; ++d) s.A[d] = (1 - w) * a.A[d] + w * b.A[d];
        s.A0 = (1 - w) * a.A0 + w * b.A0;
        s.dtA0 = (1 - w) * a.dtA0 + w * b.dtA0;
        return s;
    };
}

double cfl_limit(const GridSpec& g) { return 0.5 * g.dx() / 2.0; }

namespace {

// Force without the -2i A0 dtphi term.
SpatialField force_without_velocity(const SpatialField& phi, const BackgroundSample& bg) {
    const GridSpec& g = phi.grid;
    SpatialField out(g);
    const auto divA = divergence(bg.A);
    std::array<SpatialField, kDim> grad;
    for (int d = 0; d < kDim; ++d) grad[d] = partial(phi, d);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double a2 = 0;
        cplx adg = 0;
        for (int d = 0; d < kDim; ++d) {
            const double a = bg.A[d][i].real();
            a2 += a * a;
            adg += a * grad[d][i];
        }
        const double a0 = bg.A0[i].real();
        out[i] = cplx(0, 2) * adg - cplx(0, 1) * (bg.dtA0[i].real() - divA[i].real()) * phi[i] +
                 (a0 * a0 - a2) * phi[i];
    }
    return out;
}

void check_steps(const GridSpec& g, double T, double dt, int& nsteps) {
    if (!(dt > 0)) throw InvalidArgument("dt must be positive");
    if (dt > cfl_limit(g) * (1 + 1e-12))
        throw CflViolation("dt = " + std::to_string(dt) + " exceeds the CFL bound " + std::to_string(cfl_limit(g)));
    nsteps = int(std::lround(T / dt));
    if (nsteps < 0 || std::abs(nsteps * dt - T) > 1e-9 * std::max(1.0, std::abs(T)))
        throw InvalidArgument("T must be a non-negative integer multiple of dt");
}

// v = (v_minus + h/2 * rest) / (1 + i h A0)
SpatialField implicit_kick(const SpatialField& vminus, const SpatialField& rest, const SpatialField& A0, double h) {
    SpatialField v(vminus.grid);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = (vminus[i] + 0.5 * h * rest[i]) / cplx(1.0, h * A0[i].real());
    return v;
}

void record(WaveTrace& tr, const GaugeState& s, int step, int nsteps, const SolveOptions& opt) {
    if (opt.observer) opt.observer(s);
    const int every = std::max(1, opt.store_every);
    if (step % every == 0 || step == nsteps) tr.states.push_back(s);
}

}  // namespace

SpatialField covariant_force(const SpatialField& phi, const SpatialField& dtphi, const BackgroundSample& bg) {
    auto f = force_without_velocity(phi, bg);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= cplx(0, 2) * bg.A0[i].real() * dtphi[i];
    return f;
}

WaveTrace covariant_solve(const GaugeState& initial, const Background& bg, double T, double dt,
                          const SolveOptions& opt) {
    initial.check_grid();
    int nsteps = 0;
    check_steps(initial.grid, T, dt, nsteps);
    WaveTrace tr;
    tr.dt = dt;
    tr.scheme = opt.scheme;
    GaugeState s = initial;
    auto apply_bg = [&](GaugeState& st, const BackgroundSample& b) {
        st.A = b.A;
        st.A0 = b.A0;
        st.dtA0 = b.dtA0;
    };
    BackgroundSample b = bg(s.time);
    apply_bg(s, b);
    record(tr, s, 0, nsteps, opt);
    const double h = dt;
    for (int n = 1; n <= nsteps; ++n) {
        const double t1 = initial.time + n * h;
        SpatialField v = s.dtphi;
        v.parity = Parity::complex;
        v.axpy(0.5 * h, covariant_force(s.phi, s.dtphi, b));
        SpatialField phi;
        switch (opt.scheme) {
            case Scheme::leapfrog:
                v.axpy(0.5 * h, laplacian(s.phi));
                phi = s.phi;
                phi.axpy(h, v);
                break;
            case Scheme::trigonometric:
            case Scheme::spectral_exact: {
                auto [p1, v1] = free_propagate(s.phi, v, h);
                phi = std::move(p1);
                v = std::move(v1);
                break;
            }
        }
        b = bg(t1);
        SpatialField rest = force_without_velocity(phi, b);
        if (opt.scheme == Scheme::leapfrog) rest += laplacian(phi);
        s.dtphi = implicit_kick(v, rest, b.A0, h);
        s.phi = std::move(phi);
        s.time = t1;
        apply_bg(s, b);
        record(tr, s, n, nsteps, opt);
    }
    return tr;
}

namespace {

struct CoupledFields {
    SpatialField A0, dtA0;
    VectorField PJ;  // mean-free Leray projection of the spatial current
};

VectorField projected_current(const SpatialField& phi, const VectorField& A) {
    auto pj = leray(spatial_current(phi, A));
    for (auto& c : pj) {
        c = real_part(c);
        const cplx m = mean(c);
        for (auto& x : c.v) x -= m;
    }
    return pj;
}

SpatialField dtA0_from(const SpatialField& phi, const VectorField& A) {
    return real_part(inv_laplacian(divergence(spatial_current(phi, A)), ZeroMode::drop));
}

}  // namespace

WaveTrace coupled_solve(const GaugeState& initial, double T, double dt, const SolveOptions& opt) {
    initial.check_grid();
    int nsteps = 0;
    check_steps(initial.grid, T, dt, nsteps);
    if (opt.scheme != Scheme::trigonometric && opt.scheme != Scheme::leapfrog)
        throw InvalidArgument("coupled_solve supports the trigonometric and leapfrog schemes");
    const double h = dt;
    EllipticOptions eo;
    eo.mean = MeanPolicy::project;
    WaveTrace tr;
    tr.dt = dt;
    tr.scheme = opt.scheme;
    GaugeState s = initial;
    s.phi.parity = s.dtphi.parity = Parity::complex;
    s.A0 = solve_A0(s.phi, s.dtphi, eo, &initial.A0);
    s.dtA0 = dtA0_from(s.phi, s.A);
    record(tr, s, 0, nsteps, opt);
    VectorField pj = projected_current(s.phi, s.A);
    for (int n = 1; n <= nsteps; ++n) {
        // Half kick.
        VectorField da = s.dtA;
        for (int d = 0; d < kDim; ++d) da[d].axpy(-0.5 * h, pj[d]);
        SpatialField v = s.dtphi;
        v.axpy(0.5 * h, covariant_force(s.phi, s.dtphi, {s.A, s.A0, s.dtA0}));
        // Drift.
        VectorField a = s.A;
        SpatialField phi;
        if (opt.scheme == Scheme::trigonometric) {
            free_propagate(a, da, h);
            auto [p1, v1] = free_propagate(s.phi, v, h);
            phi = std::move(p1);
            v = std::move(v1);
        } else {
            for (int d = 0; d < kDim; ++d) {
                da[d].axpy(0.5 * h, laplacian(a[d]));
                a[d].axpy(h, da[d]);
            }
            v.axpy(0.5 * h, laplacian(s.phi));
            phi = s.phi;
            phi.axpy(h, v);
        }
        for (int d = 0; d < kDim; ++d) a[d] = real_part(a[d]), da[d] = real_part(da[d]);
        // Closing kick: A explicit, phi implicit in (dtphi, A0).
        pj = projected_current(phi, a);
        if (opt.scheme == Scheme::leapfrog)
            for (int d = 0; d < kDim; ++d) da[d].axpy(0.5 * h, laplacian(a[d]));
        for (int d = 0; d < kDim; ++d) da[d].axpy(-0.5 * h, pj[d]);
        const SpatialField dta0 = dtA0_from(phi, a);
        SpatialField a0 = s.A0;
        SpatialField vel;
        for (int it = 0;; ++it) {
            SpatialField rest = force_without_velocity(phi, {a, a0, dta0});
            if (opt.scheme == Scheme::leapfrog) rest += laplacian(phi);
            SpatialField vn = implicit_kick(v, rest, a0, h);
            const double change = vel.size() ? l2_norm(vn - vel) : l2_norm(vn);
            vel = std::move(vn);
            a0 = solve_A0(phi, vel, eo, &a0);
            if (change <= 1e-14 * l2_norm(vel) || it >= 50) break;
        }
        s.A = std::move(a);
        s.dtA = std::move(da);
        s.phi = std::move(phi);
        s.dtphi = std::move(vel);
        s.A0 = std::move(a0);
        s.dtA0 = dta0;
        s.time = initial.time + n * h;
        record(tr, s, n, nsteps, opt);
    }
    return tr;
}

}  // namespace mkg
