#include "mkg/picard.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"
#include "mkg/norms.hpp"

namespace mkg {

namespace {

Iterate empty_iterate(const GridSpec& g) {
    Iterate it;
    for (int i = 0; i < kDim; ++i) {
        it.A[i] = SpacetimeField(g, Parity::real);
        it.dtA[i] = SpacetimeField(g, Parity::real);
    }
    it.A0 = SpacetimeField(g, Parity::real);
    it.dtA0 = SpacetimeField(g, Parity::real);
    it.phi = SpacetimeField(g);
    it.dtphi = SpacetimeField(g);
    return it;
}

// sum |xi|^2 |c|^2 L^4 = ||grad u||^2
double grad_norm2(const SpatialField& u) {
    const auto c = fft(u);
    const auto& rad = bank(u.grid).radius();
    double acc = 0;
    for (std::size_t i = 0; i < c.size(); ++i) acc += rad[i] * rad[i] * std::norm(c[i]);
    return acc * u.grid.volume();
}

double l2sq(const SpatialField& u) {
    const double n = l2_norm(u);
    return n * n;
}

SpacetimeField diff(const SpacetimeField& a, const SpacetimeField& b) { return a - b; }

}  // namespace

GaugeState Iterate::slice(int m) const {
    GaugeState s = GaugeState::zero(grid());
    for (int i = 0; i < kDim; ++i) {
        s.A[i] = time_slice(A[i], m);
        s.dtA[i] = time_slice(dtA[i], m);
        s.A[i].parity = s.dtA[i].parity = Parity::real;
    }
    s.A0 = time_slice(A0, m);
    s.dtA0 = time_slice(dtA0, m);
    s.A0.parity = s.dtA0.parity = Parity::real;
    s.phi = time_slice(phi, m);
    s.dtphi = time_slice(dtphi, m);
    s.time = m * grid().dt();
    return s;
}

void Iterate::set_slice(int m, const GaugeState& s) {
    for (int i = 0; i < kDim; ++i) {
        set_time_slice(A[i], m, s.A[i]);
        set_time_slice(dtA[i], m, s.dtA[i]);
    }
    set_time_slice(A0, m, s.A0);
    set_time_slice(dtA0, m, s.dtA0);
    set_time_slice(phi, m, s.phi);
    set_time_slice(dtphi, m, s.dtphi);
}

Iterate init_iterate(const GaugeState& data) {
    data.check_grid();
    const GridSpec& g = data.grid;
    Iterate it = empty_iterate(g);
    for (int m = 0; m < g.nt; ++m) {
        const double t = m * g.dt();
        VectorField a = data.A, da = data.dtA;
        free_propagate(a, da, t);
        for (int i = 0; i < kDim; ++i) {
            set_time_slice(it.A[i], m, real_part(a[i]));
            set_time_slice(it.dtA[i], m, real_part(da[i]));
        }
        auto [p, v] = free_propagate(data.phi, data.dtphi, t);
        set_time_slice(it.phi, m, p);
        set_time_slice(it.dtphi, m, v);
    }
    return it;
}

Iterate picard_step(const Iterate& prev, const GaugeState& data, const PicardOptions& opt) {
    data.check_grid();
    const GridSpec& g = data.grid;
    if (!g.same_spacetime(prev.grid())) throw GridMismatch("iterate and data grids differ");
    if (opt.substeps < 1) throw InvalidArgument("substeps must be at least 1");
    Iterate next = empty_iterate(g);

    // Currents of the previous iterate: Leray-projected spatial part and the
    // elliptic A0, dtA0 at every sample.
    VectorSpacetimeField src;
    for (auto& c : src) c = SpacetimeField(g, Parity::real);
    for (int m = 0; m < g.nt; ++m) {
        const auto J = current(prev.slice(m));
        auto pj = leray(J.J);
        for (int i = 0; i < kDim; ++i) {
            auto c = real_part(pj[i]);
            const cplx mu = mean(c);
            for (auto& x : c.v) x -= mu;
            set_time_slice(src[i], m, c);
        }
        auto [a0, da0] = elliptic_A0(J, MeanPolicy::project);
        set_time_slice(next.A0, m, real_part(a0));
        set_time_slice(next.dtA0, m, real_part(da0));
    }

    for (int i = 0; i < kDim; ++i) {
        auto [a, da] = solve_box_with_velocity(src[i], data.A[i], data.dtA[i]);
        for (std::size_t x = 0; x < a.size(); ++x) {
            next.A[i][x] = a[x].real();
            next.dtA[i][x] = da[x].real();
        }
        src[i] = SpacetimeField();
    }

    // phi against the previous connection, linearly interpolated between samples.
    const double dts = g.dt();
    const Background bg = [&prev, &g, dts](double t) {
        const double u = t / dts;
        int m0 = int(std::floor(u + 1e-9));
        m0 = std::clamp(m0, 0, std::max(0, g.nt - 1));
        const double w = std::clamp(u - m0, 0.0, 1.0);
        BackgroundSample b;
        auto lerp = [&](const SpacetimeField& F) {
            auto f = time_slice(F, m0);
            if (w > 1e-9 && m0 + 1 < g.nt) {
                f *= 1 - w;
                f.axpy(w, time_slice(F, m0 + 1));
            }
            f.parity = Parity::real;
            return f;
        };
        for (int i = 0; i < kDim; ++i) b.A[i] = lerp(prev.A[i]);
        b.A0 = lerp(prev.A0);
        b.dtA0 = lerp(prev.dtA0);
        return b;
    };
    GaugeState init = data;
    init.time = 0;
    SolveOptions so;
    so.scheme = opt.scheme;
    so.store_every = INT_MAX;
    so.observer = [&next, dts](const GaugeState& s) {
        const double u = s.time / dts;
        const long m = std::lround(u);
        if (std::abs(u - m) > 1e-6 || m < 0 || m >= next.grid().nt) return;
        set_time_slice(next.phi, int(m), s.phi);
        set_time_slice(next.dtphi, int(m), s.dtphi);
    };
    covariant_solve(init, bg, (g.nt - 1) * dts, dts / opt.substeps, so);
    return next;
}

IterationDiff iterate_difference(const Iterate& a, const Iterate& b) {
    const GridSpec& g = a.grid();
    if (!g.same_spacetime(b.grid())) throw GridMismatch("iterates live on different grids");
    IterationDiff d;

    // Wave components of the difference and their time derivatives.
    std::vector<SpacetimeField> u, du;
    for (int i = 0; i < kDim; ++i) {
        u.push_back(diff(a.A[i], b.A[i]));
        du.push_back(diff(a.dtA[i], b.dtA[i]));
    }
    u.push_back(diff(a.phi, b.phi));
    du.push_back(diff(a.dtphi, b.dtphi));
    const auto dA0 = diff(a.A0, b.A0);

    for (int m = 0; m < g.nt; ++m) {
        double e = grad_norm2(time_slice(dA0, m));
        for (std::size_t c = 0; c < u.size(); ++c)
            e += grad_norm2(time_slice(u[c], m)) + l2sq(time_slice(du[c], m));
        d.energy = std::max(d.energy, std::sqrt(0.5 * e));
    }

    // Strichartz proxy: |grad_x P_k u| replaced by 2^k |P_k u|.
    const auto& bk = bank(g);
    const std::size_t ns = g.spatial_size();
    double s2 = 0;
    for (int k = bk.k_min(); k <= bk.k_max(); ++k) {
        const auto tab = bk.pk_symbol(k);
        std::vector<double> acc(g.spacetime_size(), 0.0);
        const double wk = std::exp2(k);
        for (std::size_t c = 0; c < u.size(); ++c)
            for (int m = 0; m < g.nt; ++m) {
                for (const auto* F : {&u[c], &du[c]}) {
                    auto cs = fft(time_slice(*F, m));
                    multiply(cs, tab);
                    const auto f = ifft(cs);
                    const double w2 = F == &u[c] ? wk * wk : 1.0;
                    for (std::size_t x = 0; x < ns; ++x) acc[m * ns + x] += w2 * std::norm(f[x]);
                }
            }
        SpacetimeField G(g, Parity::real);
        for (std::size_t x = 0; x < acc.size(); ++x) G[x] = std::sqrt(acc[x]);
        const double v = strichartz_norm(G, 2, 6, k);
        s2 += v * v;
    }
    d.strichartz = std::sqrt(s2);

    GridSpec gt = g;
    gt.taper = Taper::hann;
    for (auto& f : u) f.grid = gt;
    d.xsb = xsb_norm(u, 1.0, 0.5, kInf).aggregate;
    return d;
}

IterationTrace picard_iterate(const GaugeState& data, const PicardOptions& opt) {
    IterationTrace tr;
    Iterate cur = init_iterate(data);
    tr.count = 1;
    if (opt.keep_iterates) tr.iterates.push_back(cur);
    while (tr.count < opt.max_iterates) {
        Iterate next = picard_step(cur, data, opt);
        tr.diffs.push_back(iterate_difference(next, cur));
        ++tr.count;
        cur = std::move(next);
        if (opt.keep_iterates) tr.iterates.push_back(cur);
        if (tr.diffs.back().energy < opt.tol && tr.count >= opt.min_iterates) break;
    }
    if (!opt.keep_iterates) tr.iterates.push_back(std::move(cur));
    for (std::size_t i = 0; i + 1 < tr.diffs.size(); ++i) {
        const double den = tr.diffs[i].energy;
        tr.ratios.push_back(den > 1e-14 ? tr.diffs[i + 1].energy / den : std::numeric_limits<double>::quiet_NaN());
    }
    return tr;
}

VectorSpacetimeField nonlinear_part(const Iterate& it, const GaugeState& data) {
    const auto free = init_iterate(data);
    VectorSpacetimeField out;
    for (int i = 0; i < kDim; ++i) out[i] = it.A[i] - free.A[i];
    return out;
}

DecayFit fit_decay(const std::vector<double>& diffs, double floor) {
    DecayFit f;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (i > 0 && diffs[i] >= diffs[i - 1]) f.monotone = false;
        if (diffs[i] > floor) {
            xs.push_back(double(i));
            ys.push_back(std::log(diffs[i]));
        }
    }
    f.points = int(xs.size());
    if (f.points < 2) return f;
    const double n = f.points;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.points; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
    const double slope = cxy / cxx;
    f.ratio = std::exp(slope);
    f.r_squared = cyy > 0 ? cxy * cxy / (cxx * cyy) : 1.0;
    return f;
}

ConvergenceReport convergence_report(const std::vector<ConvergenceRun>& runs) {
    ConvergenceReport rep;
    for (const auto& r : runs) {
        std::vector<double> e;
        for (const auto& d : r.trace.diffs) e.push_back(d.energy);
        rep.eps.push_back(r.eps);
        rep.fits.push_back(fit_decay(e));
    }
    for (const auto& f : rep.fits)
        rep.ratio_scaling.push_back(rep.fits.empty() || rep.fits[0].ratio == 0 ? 0.0 : f.ratio / rep.fits[0].ratio);
    return rep;
}

std::map<int, double> envelope_diagnostic(const GaugeState& s, double delta) {
    const GridSpec& g = s.grid;
    const auto& bk = bank(g);
    std::map<int, double> raw, env;
    for (int k = bk.k_min(); k <= bk.k_max(); ++k) {
        double e = 0;
        for (int i = 0; i < kDim; ++i) e += grad_norm2(pk(s.A[i], k)) + l2sq(pk(s.dtA[i], k));
        e += grad_norm2(pk(s.phi, k)) + l2sq(pk(s.dtphi, k));
        raw[k] = std::sqrt(e);
    }
    for (const auto& [k, _] : raw) {
        double c = 0;
        for (const auto& [kp, v] : raw) c = std::max(c, std::exp2(-delta * std::abs(k - kp)) * v);
        env[k] = c;
    }
    return env;
}

}  // namespace mkg
