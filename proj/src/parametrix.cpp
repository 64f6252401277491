#include "mkg/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"
#include "mkg/norms.hpp"
#include "mkg/random_data.hpp"
#include "mkg/state.hpp"
#include "mkg/wave.hpp"

namespace mkg {

namespace {

const SectorSet& sectors_for(int l) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<SectorSet>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, std::make_unique<SectorSet>(SectorSet::make(l))).first;
    return *it->second;
}

std::array<int, kDim> lattice_index(const GridSpec& g, std::size_t idx) {
    std::array<int, kDim> n{};
    for (int d = kDim - 1; d >= 0; --d) {
        n[d] = signed_index(int(idx % g.n), g.n);
        idx /= g.n;
    }
    return n;
}

Vec4 unit_of(const Vec4& v) {
    const double r = norm(v);
    return {v[0] / r, v[1] / r, v[2] / r, v[3] / r};
}

SpacetimeField mul(const SpacetimeField& a, const SpacetimeField& b) {
    a.check_same(b);
    SpacetimeField out(a.grid, Parity::complex);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

SpacetimeField box_t(const SpacetimeField& phi, TimeDerivative td) {
    if (td == TimeDerivative::spectral) return box(phi);
    return laplacian(phi) - fd_second_derivative(phi);
}

}  // namespace

void PsiConfig::validate() const {
    if (!(delta >= 0) || !std::isfinite(delta)) throw InvalidArgument("psi delta must be finite and non-negative");
}

void QuantizationConfig::validate() const {
    if (aperture > 0 || aperture < -3) throw InvalidArgument("sector aperture must lie in -3..0");
    if (!(symbol_cutoff > 0)) throw InvalidArgument("symbol cutoff must be positive");
}

double line_angle(const Vec4& eta, const Vec4& w) {
    const Vec4 u = unit_of(w);
    const double c = dot(eta, u);
    Vec4 p{};
    for (int d = 0; d < kDim; ++d) p[d] = eta[d] - c * u[d];
    return std::atan2(norm(p), std::abs(c));
}

double small_angle_cut(double angle, int k, double delta) {
    return 1.0 - lp::low(angle / std::exp2(delta * k + 1));
}

PhaseSymbol PhaseSymbol::from_modes(const GridSpec& g, std::vector<FreeMode> modes, int sign, const PsiConfig& cfg) {
    if (sign != 1 && sign != -1) throw InvalidArgument("phase sign must be +1 or -1");
    cfg.validate();
    PhaseSymbol p;
    p.grid_ = g;
    p.modes_ = std::move(modes);
    p.sign_ = sign;
    p.cfg_ = cfg;
    return p;
}

PhaseSymbol PhaseSymbol::build(const VectorField& A, const VectorField& dtA, int sign, const PsiConfig& cfg) {
    const GridSpec& g = A[0].grid;
    std::array<SpatialSpectrum, kDim> a, b;
    double mx = 0, grad = 0, div = 0;
    for (int d = 0; d < kDim; ++d) {
        a[d] = fft(A[d]);
        b[d] = fft(dtA[d]);
        for (std::size_t i = 0; i < a[d].size(); ++i) mx = std::max({mx, std::abs(a[d][i]), std::abs(b[d][i])});
    }
    std::vector<FreeMode> modes;
    for_each_mode(g, [&](std::size_t i, const Vec4& xf, const Vec4& xd) {
        bool occupied = false;
        for (int d = 0; d < kDim; ++d) occupied |= std::abs(a[d][i]) > 1e-14 * mx || std::abs(b[d][i]) > 1e-14 * mx;
        if (!occupied) return;
        if (norm(xf) == 0) throw InvalidArgument("connection has a constant mode");
        FreeMode m;
        m.n = lattice_index(g, i);
        m.eta = xf;
        m.eta_d = xd;
        cplx da = 0, db = 0;
        for (int d = 0; d < kDim; ++d) {
            m.a[d] = a[d][i];
            m.b[d] = b[d][i];
            da += xd[d] * m.a[d];
            db += xd[d] * m.b[d];
            grad = std::max({grad, norm(xf) * std::abs(m.a[d]), std::abs(m.b[d])});
        }
        div = std::max({div, std::abs(da), std::abs(db)});
        modes.push_back(m);
    });
    if (div > 1e-10 * grad) throw InvalidArgument("connection is not divergence free");
    return from_modes(g, std::move(modes), sign, cfg);
}

PhaseSymbol PhaseSymbol::build(const VectorSpacetimeField& A, const VectorSpacetimeField& dtA, int sign,
                               const PsiConfig& cfg, double tol) {
    const GridSpec& tg = A[0].grid;
    VectorField a0, b0;
    for (int d = 0; d < kDim; ++d) {
        a0[d] = time_slice(A[d], 0);
        b0[d] = time_slice(dtA[d], 0);
    }
    const double ref = std::max(l2_norm(a0), l2_norm(b0));
    for (int m = 1; m < tg.nt; ++m) {
        auto a = a0, b = b0;
        free_propagate(a, b, m * tg.dt());
        double err = 0;
        for (int d = 0; d < kDim; ++d)
            err = std::max({err, l2_norm(time_slice(A[d], m) - a[d]), l2_norm(time_slice(dtA[d], m) - b[d])});
        if (err > tol * ref) throw InvalidArgument("connection trace is not a free wave");
    }
    return build(a0, b0, sign, cfg);
}

PhaseSymbol PhaseSymbol::negated() const {
    PhaseSymbol p = *this;
    p.scale_ = -scale_;
    return p;
}

double PhaseSymbol::weight(const FreeMode& m, const Vec4& w) const {
    const double r = norm(m.eta);
    if (r == 0) return 0;
    const int kc = int(std::floor(std::log2(r)));
    const double ang = cfg_.small_angle ? line_angle(m.eta, w) : 0.0;
    double s = 0;
    for (int k = kc - 1; k <= kc + 1; ++k) {
        if (k >= cfg_.k_cut) break;
        const double c = lp::chi(r / std::ldexp(1.0, k));
        if (c == 0) continue;
        s += c * (cfg_.small_angle ? small_angle_cut(ang, k, cfg_.delta) : 1.0);
    }
    return s;
}

namespace {

cplx coefficient_impl(const FreeMode& m, const Vec4& w, double t, double wt, int sign, double scale) {
    if (wt == 0) return 0;
    const double r = norm(m.eta);
    const double c = std::cos(r * t), s = std::sin(r * t);
    cplx wa = 0, wb = 0;
    for (int d = 0; d < kDim; ++d) {
        wa += w[d] * m.a[d];
        wb += w[d] * m.b[d];
    }
    const cplx At = c * wa + s / r * wb;
    const cplx Att = -r * s * wa + c * wb;
    const double we = dot(w, m.eta);
    const double perp = r * r - we * we;
    if (perp <= 1e-12 * r * r) {
        if (std::abs(At) + std::abs(Att) == 0) return 0;
        throw ParallelFrequency("A has content parallel to a sector direction that the small-angle cut did not remove");
    }
    return scale * sign * wt * (Att + cplx(0, sign * dot(w, m.eta_d)) * At) / perp;
}

}  // namespace

cplx PhaseSymbol::coefficient(const FreeMode& m, const Vec4& w, double t) const {
    return coefficient_impl(m, w, t, weight(m, w), sign_, scale_);
}

double PhaseSymbol::psi_at(double t, const Vec4& x, const Vec4& w) const {
    double s = 0;
    for (const auto& m : modes_) s += (coefficient(m, w, t) * std::exp(cplx(0, dot(m.eta, x)))).real();
    return s;
}

SpatialField PhaseSymbol::psi(double t, const Vec4& w) const {
    SpatialSpectrum c(grid_, Parity::real);
    for (const auto& m : modes_) c[mode_index(grid_, m.n)] += coefficient(m, w, t);
    return ifft(c, Parity::real);
}

int PhaseSymbol::band() const {
    int b = 0;
    for (const auto& m : modes_)
        for (int x : m.n) b = std::max(b, std::abs(x));
    return b;
}

SymbolSlice phase_symbols(const PhaseSymbol& psi, double t, const QuantizationConfig& cfg) {
    cfg.validate();
    const auto& sec = sectors_for(cfg.aperture);
    const GridSpec& g = psi.grid();
    SymbolSlice out;
    out.t = t;
    out.aperture = cfg.aperture;
    out.coef.resize(sec.size());
    if (psi.trivial()) {
        out.offset.push_back({0, 0, 0, 0});
        for (auto& c : out.coef) c.push_back(1.0);
        return out;
    }
    // e^{i psi} is formed on a coarser lattice that still holds psi and the
    // retained symbol band without wrap-around.
    const int bs = int(std::floor(cfg.symbol_cutoff / g.xi_unit()));
    int m = 2 * (psi.band() + bs) + 2;
    m += m % 2;
    GridSpec sub = g;
    sub.n = std::min(m, g.n);
    sub.nt = 1;
    if (2 * psi.band() >= sub.n) throw InvalidArgument("phase band does not fit the grid");
    std::vector<double> lw;
    for (int a = -bs; a <= bs; ++a)
        for (int b = -bs; b <= bs; ++b)
            for (int c = -bs; c <= bs; ++c)
                for (int d = -bs; d <= bs; ++d) {
                    const std::array<int, kDim> o{a, b, c, d};
                    double r2 = 0;
                    for (int x : o) r2 += double(x) * x;
                    const double v = lp::low(std::sqrt(r2) * g.xi_unit() / cfg.symbol_cutoff);
                    if (v > 0 && 2 * std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}) < sub.n) {
                        out.offset.push_back(o);
                        lw.push_back(v);
                    }
                }
    const auto& dirs = sec.directions();
    for (std::size_t w = 0; w < dirs.size(); ++w) {
        SpatialSpectrum c(sub, Parity::real);
        for (const auto& md : psi.modes()) c[mode_index(sub, md.n)] += psi.coefficient(md, dirs[w], t);
        auto e = ifft(c, Parity::real);
        for (auto& x : e.v) x = std::exp(cplx(0, x.real()));
        e.parity = Parity::complex;
        const auto eh = fft(e);
        for (std::size_t q = 0; q < out.offset.size(); ++q)
            out.coef[w].push_back(lw[q] * eh[mode_index(sub, out.offset[q])]);
    }
    return out;
}

namespace {

// nb[i * Q + q] = flat index of mode i - offset[q] (periodic).
const std::vector<std::uint32_t>& neighbour_table(int n, const std::vector<std::array<int, kDim>>& offset) {
    static std::mutex mu;
    static int key_n = -1;
    static std::vector<std::array<int, kDim>> key_off;
    static std::vector<std::uint32_t> nb;
    std::lock_guard<std::mutex> lock(mu);
    if (key_n == n && key_off == offset) return nb;
    const std::size_t Q = offset.size(), ns = std::size_t(n) * n * n * n;
    nb.assign(ns * Q, 0);
    std::vector<int> wrap(3 * n);
    for (int i = 0; i < 3 * n; ++i) wrap[i] = i % n;
    for (std::size_t i = 0; i < ns; ++i) {
        const int c[kDim] = {int(i / (std::size_t(n) * n * n)), int(i / (n * n) % n), int(i / n % n), int(i % n)};
        for (std::size_t q = 0; q < Q; ++q) {
            std::size_t idx = 0;
            for (int d = 0; d < kDim; ++d) idx = idx * n + wrap[c[d] - offset[q][d] + n];
            nb[i * Q + q] = std::uint32_t(idx);
        }
    }
    key_n = n;
    key_off = offset;
    return nb;
}

}  // namespace

SpatialSpectrum quantize(const SymbolSlice& s, const SpatialSpectrum& u, Side side) {
    const GridSpec& g = u.grid;
    const auto& sec = sectors_for(s.aperture);
    if (s.coef.size() != sec.size()) throw InvalidArgument("symbol slice does not match the sector set");
    for (const auto& o : s.offset)
        for (int x : o)
            if (2 * std::abs(x) >= g.n) throw InvalidArgument("symbol offsets exceed the grid");
    const auto& tab = sector_table(g, sec);
    const auto& nb = neighbour_table(g.n, s.offset);
    const std::size_t Q = s.offset.size();
    SpatialSpectrum out(g, Parity::complex);
    if (side == Side::left) {
        // S[e^{-i psi}] has coefficient conj(sigma(o)) at -o.
        for (std::size_t w = 0; w < sec.size(); ++w) {
            const auto& sy = s.coef[w];
            for (const auto& [i, c] : tab.entries[w]) {
                if (u[i] == cplx(0)) continue;
                const cplx v = c * c * u[i];
                const std::uint32_t* row = &nb[i * Q];
                for (std::size_t q = 0; q < Q; ++q) out[row[q]] += std::conj(sy[q]) * v;
            }
        }
    } else {
        // Only modes within the symbol band of the input support can be reached.
        std::vector<char> live(u.size(), 0);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const std::uint32_t* row = &nb[i * Q];
            for (std::size_t q = 0; q < Q && !live[i]; ++q) live[i] = u[row[q]] != cplx(0);
        }
        for (std::size_t w = 0; w < sec.size(); ++w) {
            const auto& sy = s.coef[w];
            for (const auto& [i, c] : tab.entries[w]) {
                if (!live[i]) continue;
                const std::uint32_t* row = &nb[i * Q];
                cplx acc = 0;
                for (std::size_t q = 0; q < Q; ++q) acc += sy[q] * u[row[q]];
                out[i] += c * c * acc;
            }
        }
    }
    return out;
}

SpatialField quantize(const PhaseSymbol& psi, const SpatialField& u, double t, const QuantizationConfig& cfg) {
    if (!u.grid.same_space(psi.grid())) throw GridMismatch("phase and input grids differ");
    return ifft(quantize(phase_symbols(psi, t, cfg), fft(u), cfg.side), Parity::complex);
}

SpacetimeField quantize(const PhaseSymbol& psi, const SpacetimeField& u, const QuantizationConfig& cfg) {
    SpacetimeField out(u.grid, Parity::complex);
    for (int m = 0; m < u.grid.nt; ++m)
        set_time_slice(out, m, quantize(psi, time_slice(u, m), m * u.grid.dt(), cfg));
    return out;
}

SpatialField p0(const SpatialField& u) { return apply_table(u, bank(u.grid).pk_symbol(0)); }

SpatialField frequency_one_field(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    SpatialSpectrum c(g, Parity::complex);
    for_each_mode(g, [&](std::size_t i, const Vec4& xf, const Vec4&) {
        const double re = nd(rng), im = nd(rng);
        c[i] = lp::chi(norm(xf)) * cplx(re, im);
    });
    auto f = ifft(c, Parity::complex);
    f *= 1.0 / l2_norm(f);
    return f;
}

double localization_defect(const SpatialField& u) {
    const auto c = fft(u);
    const auto& r = bank(u.grid).radius();
    double out = 0, tot = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a = std::norm(c[i]);
        tot += a;
        if (lp::chi(r[i]) == 0) out += a;
    }
    return tot == 0 ? 0 : std::sqrt(out / tot);
}

std::pair<VectorField, VectorField> free_connection(const GridSpec& g, double eps, std::uint64_t seed, int kmin,
                                                    int kmax) {
    DataSpec spec;
    spec.seed = seed;
    spec.kmin = kmin;
    spec.kmax = kmax;
    spec.eps = 1.0;
    spec.with_field = true;
    const auto s = generate_data(g, spec);
    auto st = GaugeState::zero(g);
    st.A = s.A;
    st.dtA = s.dtA;
    // Normalized per (2 pi)^4 cell so the local amplitude does not depend on the period.
    const double n = energy_norm(st) * std::pow(2 * std::numbers::pi / g.period, 2);
    VectorField A = s.A, dA = s.dtA;
    for (int d = 0; d < kDim; ++d) {
        A[d] *= n == 0 ? 0.0 : eps / n;
        dA[d] *= n == 0 ? 0.0 : eps / n;
    }
    return {A, dA};
}

VectorSpacetimeField free_trace(const VectorField& A, const VectorField& dtA, const GridSpec& trace) {
    if (!trace.same_space(A[0].grid)) throw GridMismatch("trace and connection grids differ");
    VectorSpacetimeField out;
    for (auto& x : out) x = SpacetimeField(trace, Parity::real);
    for (int m = 0; m < trace.nt; ++m) {
        auto a = A, b = dtA;
        free_propagate(a, b, m * trace.dt());
        for (int d = 0; d < kDim; ++d) set_time_slice(out[d], m, a[d]);
    }
    return out;
}

SpacetimeField box_Ap(const SpacetimeField& phi, const VectorSpacetimeField& A, int C, TimeDerivative td) {
    auto out = box_t(phi, td);
    const auto& b = bank(phi.grid);
    SpacetimeField para(phi.grid, Parity::complex);
    for (int k = b.k_min(); k <= b.k_max(); ++k) {
        const auto pkphi = pk(phi, k);
        for (int j = 0; j < kDim; ++j) para += mul(p_less(A[j], k - C), partial(pkphi, j));
    }
    out.axpy(cplx(0, 2), para);
    return out;
}

SpacetimeField box_A_full(const SpacetimeField& phi, const VectorSpacetimeField& A, TimeDerivative td) {
    auto out = box_t(phi, td);
    for (int j = 0; j < kDim; ++j) out.axpy(cplx(0, 2), mul(A[j], partial(phi, j)));
    return out;
}

namespace {

void check_localized(const SpatialField& u, const char* what) {
    if (localization_defect(u) > 1e-10)
        throw LocalizationError(std::string(what) + " is not localized at frequency 1");
}

void check_input(const PhiAppInput& in, const PhaseSymbol& plus, const PhaseSymbol& minus) {
    if (plus.sign() != 1 || minus.sign() != -1) throw InvalidArgument("phases must be (psi_+, psi_-)");
    const GridSpec& g = in.g.grid;
    if (!g.same_space(in.h.grid) || !g.same_space(in.f.grid) || !g.same_space(plus.grid()) ||
        !g.same_space(minus.grid()))
        throw GridMismatch("parametrix inputs live on different grids");
    check_localized(in.g, "g");
    check_localized(in.h, "h");
    for (int m = 0; m < in.f.grid.nt; ++m) check_localized(time_slice(in.f, m), "f");
}

// |D| g - s i h, right-quantized at t = 0.
SpatialSpectrum initial_block(const PhiAppInput& in, const SymbolSlice& sym0, int s) {
    const auto gh = fft(in.g), hh = fft(in.h);
    const auto& r = bank(in.g.grid).radius();
    SpatialSpectrum d(in.g.grid, Parity::complex);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = r[i] * gh[i] - cplx(0, s) * hh[i];
    return quantize(sym0, d, Side::right);
}

SpatialSpectrum inv_abs(SpatialSpectrum c) {
    const auto& r = bank(c.grid).radius();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = r[i] == 0 ? cplx(0) : c[i] / r[i];
    return c;
}

// 1/2 L_s(t) |D|^{-1} e^{ist|D|} rd
SpatialSpectrum homogeneous(const PhaseSymbol& psi, const SpatialSpectrum& rd, double t, const QuantizationConfig& cfg) {
    const auto& r = bank(rd.grid).radius();
    SpatialSpectrum c(rd.grid, Parity::complex);
    for (std::size_t i = 0; i < c.size(); ++i)
        if (r[i] != 0) c[i] = 0.5 * std::exp(cplx(0, psi.sign() * t * r[i])) * rd[i] / r[i];
    return quantize(phase_symbols(psi, t, cfg), c, Side::left);
}

// int_0^t e^{is(t-s')|D|} F(s') ds' stepping one interval at a time with the
// cubic interpolant of F and exact phase weights (Gauss-Legendre on each step),
// so the error is smooth in t and survives finite differencing.
SpacetimeField duhamel_smooth(const SpacetimeField& F, int sign) {
    const GridSpec& g = F.grid;
    const int nt = g.nt;
    if (nt < 4) throw InvalidArgument("duhamel needs at least 4 time samples");
    const double h = g.dt();
    const auto& r = bank(g).radius();
    const std::size_t ns = g.spatial_size();
    static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                 -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
    static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066503814161,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066503814161,
                                 0.2223810344533745, 0.1012285362903763};
    std::vector<SpatialSpectrum> fh(nt);
    for (int m = 0; m < nt; ++m) fh[m] = fft(time_slice(F, m));
    // Stencil start relative to the step [m, m+1]: -1 inside, 0 at the start, -2 at the end.
    auto start = [&](int m) { return m == 0 ? 0 : (m + 2 >= nt ? nt - 4 - m : -1); };
    std::map<double, std::array<std::array<cplx, 4>, 3>> cache;
    auto weights = [&](double rad) -> const std::array<std::array<cplx, 4>, 3>& {
        auto it = cache.find(rad);
        if (it != cache.end()) return it->second;
        std::array<std::array<cplx, 4>, 3> w{};
        for (int st = 0; st < 3; ++st) {
            const int j0 = st == 0 ? 0 : (st == 1 ? -1 : -2);
            for (int q = 0; q < 8; ++q) {
                const double x = 0.5 * (gx[q] + 1);  // position in the step, units of h
                const cplx ph = std::exp(cplx(0, sign * rad * h * (1 - x)));
                for (int a = 0; a < 4; ++a) {
                    double l = 1;
                    for (int b = 0; b < 4; ++b)
                        if (b != a) l *= (x - (j0 + b)) / double(a - b);
                    w[st][a] += 0.5 * h * gw[q] * ph * l;
                }
            }
        }
        return cache.emplace(rad, w).first->second;
    };
    SpacetimeField out(g, Parity::complex);
    SpatialSpectrum u(g, Parity::complex);
    set_time_slice(out, 0, ifft(u, Parity::complex));
    for (int m = 0; m + 1 < nt; ++m) {
        const int j0 = start(m);
        const int st = j0 == 0 ? 0 : (j0 == -1 ? 1 : 2);
        for (std::size_t i = 0; i < ns; ++i) {
            const auto& w = weights(r[i])[st];
            cplx acc = std::exp(cplx(0, sign * r[i] * h)) * u[i];
            for (int a = 0; a < 4; ++a) acc += w[a] * fh[m + j0 + a][i];
            u[i] = acc;
        }
        set_time_slice(out, m + 1, ifft(u, Parity::complex));
    }
    return out;
}

}  // namespace

SpacetimeField build_phi_app(const PhiAppInput& in, const PhaseSymbol& plus, const PhaseSymbol& minus,
                             const QuantizationConfig& cfg) {
    check_input(in, plus, minus);
    const GridSpec& tg = in.f.grid;
    const auto& r = bank(tg).radius();
    SpacetimeField out(tg, Parity::complex);
    for (const PhaseSymbol* psi : {&plus, &minus}) {
        const int s = psi->sign();
        std::vector<SymbolSlice> sym;
        for (int m = 0; m < tg.nt; ++m) sym.push_back(phase_symbols(*psi, m * tg.dt(), cfg));
        const auto rd = initial_block(in, sym[0], s);
        SpacetimeField F(tg, Parity::complex);
        for (int m = 0; m < tg.nt; ++m)
            set_time_slice(F, m, ifft(quantize(sym[m], fft(time_slice(in.f, m)), Side::right), Parity::complex));
        const auto K = duhamel_smooth(F, s);
        for (int m = 0; m < tg.nt; ++m) {
            const double t = m * tg.dt();
            const auto kh = fft(time_slice(K, m));
            SpatialSpectrum w(tg, Parity::complex);
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (r[i] == 0) continue;
                w[i] = (0.5 * std::exp(cplx(0, s * t * r[i])) * rd[i] + cplx(0, 0.5 * s) * kh[i]) / r[i];
            }
            auto slice = time_slice(out, m);
            slice += ifft(quantize(sym[m], w, Side::left), Parity::complex);
            set_time_slice(out, m, slice);
        }
    }
    return out;
}

std::pair<SpatialField, SpatialField> phi_app_initial(const PhiAppInput& in, const PhaseSymbol& plus,
                                                      const PhaseSymbol& minus, const QuantizationConfig& cfg) {
    check_input(in, plus, minus);
    const GridSpec& g = in.g.grid;
    SpatialSpectrum pos(g, Parity::complex), vel(g, Parity::complex);
    const double h = 2e-3;
    for (const PhaseSymbol* psi : {&plus, &minus}) {
        const int s = psi->sign();
        const auto sym0 = phase_symbols(*psi, 0.0, cfg);
        const auto rd = initial_block(in, sym0, s);
        pos += homogeneous(*psi, rd, 0.0, cfg);
        vel.axpy(-1.0 / (12 * h), homogeneous(*psi, rd, 2 * h, cfg));
        vel.axpy(8.0 / (12 * h), homogeneous(*psi, rd, h, cfg));
        vel.axpy(-8.0 / (12 * h), homogeneous(*psi, rd, -h, cfg));
        vel.axpy(1.0 / (12 * h), homogeneous(*psi, rd, -2 * h, cfg));
        const auto f0 = quantize(sym0, fft(time_slice(in.f, 0)), Side::right);
        vel.axpy(cplx(0, 0.5 * s), quantize(sym0, inv_abs(f0), Side::left));
    }
    return {ifft(pos, Parity::complex), ifft(vel, Parity::complex)};
}

ParametrixError parametrix_error(const PhiAppInput& in, const PhaseSymbol& plus, const PhaseSymbol& minus,
                                 const VectorSpacetimeField& A, int C, const QuantizationConfig& cfg) {
    ParametrixError e;
    e.denominator = lqlr(in.f, 1, 2) + l2_norm(in.g) + l2_norm(in.h);
    if (e.denominator == 0) return e;
    const auto [p0v, v0] = phi_app_initial(in, plus, minus, cfg);
    e.mismatch = (l2_norm(p0v - in.g) + l2_norm(v0 - in.h)) / e.denominator;
    const auto phi = build_phi_app(in, plus, minus, cfg);
    const auto res = box_Ap(phi, A, C, TimeDerivative::finite_difference) - in.f;
    e.residual = lqlr(res, 1, 2) / e.denominator;
    return e;
}

namespace {

template <class Op>
PowerResult power_iteration(Op&& T, SpatialField v, int iterations) {
    PowerResult r;
    double prev = 0;
    for (int it = 0; it < iterations; ++it) {
        auto w = T(v);
        const double lam = l2_norm(w);
        r.iterations = it + 1;
        r.value = lam;
        r.change = lam == 0 ? 0 : std::abs(lam - prev) / lam;
        if (lam == 0) break;
        w *= 1.0 / lam;
        v = std::move(w);
        prev = lam;
    }
    return r;
}

}  // namespace

PowerResult l2_probe(const PhaseSymbol& psi, double t, const QuantizationConfig& cfg, std::uint64_t seed,
                     int iterations) {
    const auto sym = phase_symbols(psi, t, cfg);
    auto T = [&](const SpatialField& v) {
        const auto x = fft(p0(v));
        return p0(ifft(quantize(sym, quantize(sym, x, Side::left), Side::right), Parity::complex));
    };
    auto r = power_iteration(T, frequency_one_field(psi.grid(), seed), iterations);
    r.value = std::sqrt(r.value);
    return r;
}

PowerResult ortho_probe(const PhaseSymbol& psi, double t, const QuantizationConfig& cfg, std::uint64_t seed,
                        int iterations) {
    const auto sym = phase_symbols(psi, t, cfg);
    auto T = [&](const SpatialField& v) {
        const auto x = p0(v);
        auto y = ifft(quantize(sym, quantize(sym, fft(x), Side::right), Side::left), Parity::complex);
        y -= x;
        return p0(y);
    };
    return power_iteration(T, frequency_one_field(psi.grid(), seed), iterations);
}

PowerFit fit_power(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw InvalidArgument("fit_power needs matching sizes");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < eps.size(); ++i) pts.emplace_back(eps[i], values[i]);
    std::sort(pts.begin(), pts.end());
    PowerFit f;
    f.monotone = true;
    for (std::size_t i = 1; i < pts.size(); ++i) f.monotone &= pts[i].second > pts[i - 1].second;
    std::vector<double> x, y;
    for (const auto& [e, v] : pts)
        if (e > 0 && v > 0) {
            x.push_back(std::log(e));
            y.push_back(std::log(v));
        }
    const std::size_t n = x.size();
    if (n < 2) return f;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.power = sxy / sxx;
    f.r_squared = syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
    return f;
}

double kernel_bump(double r) {
    if (!(r > 0.5 && r < 2.0)) return 0;
    const double s = std::log2(r);
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

KernelConfig default_kernel_config() {
    KernelConfig c;
    for (int i = 0; i < 9; ++i) c.cone_times.push_back(std::pow(100.0, i / 8.0));
    c.offcone_gaps = {3, 4, 6, 8, 12, 16};
    return c;
}

KernelReport kernel_probe(const KernelConfig& cfg) {
    if (cfg.cells < 4) throw InvalidArgument("kernel probe needs at least 4 cells");
    if (cfg.sign != 1 && cfg.sign != -1) throw InvalidArgument("kernel sign must be +1 or -1");
    const double L = 2 * std::numbers::pi * cfg.cells;
    const double unit = 1.0 / cfg.cells;
    GridSpec kg;
    kg.n = 4 * cfg.cells;
    kg.period = L;

    // Sparse random Coulomb connection with the requested energy per 2 pi cell.
    std::vector<FreeMode> modes;
    if (cfg.eps > 0 && cfg.a_modes > 0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_int_distribution<int> ui(-cfg.cells / 2, cfg.cells / 2);
        std::normal_distribution<double> nd;
        double S = 0;
        while (int(modes.size()) < 2 * cfg.a_modes) {
            std::array<int, kDim> n{};
            for (auto& x : n) x = ui(rng);
            Vec4 eta{};
            for (int d = 0; d < kDim; ++d) eta[d] = n[d] * unit;
            const double r = norm(eta);
            if (r < 0.25 || r > 0.5) continue;
            bool dup = false;
            for (const auto& m : modes) {
                bool same = true, opp = true;
                for (int d = 0; d < kDim; ++d) {
                    same &= m.n[d] == n[d];
                    opp &= m.n[d] == -n[d];
                }
                dup |= same || opp;
            }
            if (dup) continue;
            FreeMode m;
            m.n = n;
            m.eta = eta;
            m.eta_d = eta;
            const Vec4 e = unit_of(eta);
            for (auto* v : {&m.a, &m.b}) {
                for (auto& x : *v) x = cplx(nd(rng), nd(rng));
                cplx c = 0;
                for (int d = 0; d < kDim; ++d) c += e[d] * (*v)[d];
                for (int d = 0; d < kDim; ++d) (*v)[d] -= c * e[d];
            }
            FreeMode c = m;
            for (int d = 0; d < kDim; ++d) {
                c.n[d] = -m.n[d];
                c.eta[d] = c.eta_d[d] = -m.eta[d];
                c.a[d] = std::conj(m.a[d]);
                c.b[d] = std::conj(m.b[d]);
            }
            for (const auto* x : {&m, &c})
                for (int d = 0; d < kDim; ++d) S += r * r * std::norm(x->a[d]) + std::norm(x->b[d]);
            modes.push_back(m);
            modes.push_back(c);
        }
        const double sc = cfg.eps / (std::pow(2 * std::numbers::pi, 2) * std::sqrt(S));
        for (auto& m : modes)
            for (int d = 0; d < kDim; ++d) {
                m.a[d] *= sc;
                m.b[d] *= sc;
            }
    }
    const auto psi = PhaseSymbol::from_modes(kg, modes, cfg.sign, cfg.psi);

    struct Point {
        double t;
        Vec4 x;
    };
    const Vec4 dir = unit_of({1.0, 0.6, 0.35, 0.2});
    auto at = [&](double t, double r) { return Point{t, {r * dir[0], r * dir[1], r * dir[2], r * dir[3]}}; };
    std::vector<Point> pts;
    for (double t : cfg.cone_times) pts.push_back(at(t, t));
    for (double gap : cfg.offcone_gaps) {
        if (!(gap > 0)) throw InvalidArgument("off-cone gaps must be positive");
        pts.push_back(at(cfg.offcone_time, cfg.offcone_time + gap));
    }
    std::vector<cplx> K(pts.size(), 0.0);

    // Modes come in conjugate pairs; the pair contributes twice the real part
    // of the first, so only even indices are summed. With U, V the per-direction
    // parts, psi(t, x) = Re sum_q (U_q cos(r_q t) + V_q sin(r_q t)) e^{i eta_q . x}.
    const std::size_t P = pts.size(), Q = modes.size() / 2;
    std::vector<double> mr(Q);
    std::vector<cplx> ce(Q * P), se(Q * P);
    for (std::size_t q = 0; q < Q; ++q) {
        const auto& m = modes[2 * q];
        mr[q] = norm(m.eta);
        for (std::size_t p = 0; p < P; ++p) {
            const cplx e = std::exp(cplx(0, dot(m.eta, pts[p].x)));
            ce[q * P + p] = std::cos(mr[q] * pts[p].t) * e;
            se[q * P + p] = std::sin(mr[q] * pts[p].t) * e;
        }
    }
    std::vector<cplx> qu(Q), qv(Q);
    // Radial LP factors of weight(), which do not depend on the direction.
    std::vector<std::vector<std::pair<int, double>>> qchi(Q);
    for (std::size_t q = 0; q < Q; ++q) {
        if (mr[q] == 0) continue;
        const int kc = int(std::floor(std::log2(mr[q])));
        for (int k = kc - 1; k <= kc + 1 && k < cfg.psi.k_cut; ++k) {
            const double c = lp::chi(mr[q] / std::ldexp(1.0, k));
            if (c != 0) qchi[q].push_back({k, c});
        }
    }

    // Plane waves factor per axis; the time phase depends on |n|^2 only.
    const int B = 2 * cfg.cells, B2 = B * B, H2 = cfg.cells * cfg.cells / 4;
    const int W = 2 * B + 1;
    std::vector<cplx> ax(std::size_t(kDim) * W * P), rad(std::size_t(B2 + 1) * P);
    for (int d = 0; d < kDim; ++d)
        for (int n = -B; n <= B; ++n)
            for (std::size_t p = 0; p < P; ++p)
                ax[(std::size_t(d) * W + n + B) * P + p] = std::exp(cplx(0, n * unit * pts[p].x[d]));
    for (int n2 = 0; n2 <= B2; ++n2)
        for (std::size_t p = 0; p < P; ++p)
            rad[std::size_t(n2) * P + p] = std::exp(cplx(0, cfg.sign * pts[p].t * std::sqrt(double(n2)) * unit));
    auto axis = [&](int d, int n) { return &ax[(std::size_t(d) * W + n + B) * P]; };
    std::vector<cplx> ab(P), abc(P);

    KernelReport rep;
    for (int a = -B; a <= B; ++a)
        for (int b = -B; b <= B; ++b) {
            if (a * a + b * b >= B2) continue;
            for (std::size_t p = 0; p < P; ++p) ab[p] = axis(0, a)[p] * axis(1, b)[p];
            for (int c = -B; c <= B; ++c) {
                const int n3 = a * a + b * b + c * c;
                if (n3 >= B2) continue;
                for (std::size_t p = 0; p < P; ++p) abc[p] = ab[p] * axis(2, c)[p];
                const int dmax = int(std::sqrt(double(B2 - n3)));
                for (int d = -dmax; d <= dmax; ++d) {
                    const int n2 = n3 + d * d;
                    if (n2 <= H2 || n2 >= B2) continue;
                    const double r = std::sqrt(double(n2)) * unit;
                    const double amp = kernel_bump(r);
                    if (amp == 0) continue;
                    ++rep.modes;
                    const cplx* ed = axis(3, d);
                    const cplx* er = &rad[std::size_t(n2) * P];
                    bool any = false;
                    double psi0 = 0;
                    if (!psi.trivial()) {
                        const Vec4 w{a * unit / r, b * unit / r, c * unit / r, d * unit / r};
                        for (std::size_t q = 0; q < Q; ++q) {
                            const auto& m = modes[2 * q];
                            qu[q] = qv[q] = 0;
                            const double we = dot(w, m.eta), perp = mr[q] * mr[q] - we * we;
                            const double ang = std::atan2(std::sqrt(std::max(perp, 0.0)), std::abs(we));
                            double wt = 0;
                            for (const auto& [k, c] : qchi[q])
                                wt += c * (cfg.psi.small_angle ? small_angle_cut(ang, k, cfg.psi.delta) : 1.0);
                            if (wt == 0) continue;
                            cplx wa = 0, wb = 0;
                            for (int k = 0; k < kDim; ++k) {
                                wa += w[k] * m.a[k];
                                wb += w[k] * m.b[k];
                            }
                            if (perp <= 1e-12 * mr[q] * mr[q]) {
                                if (std::abs(wa) + std::abs(wb) == 0) continue;
                                throw ParallelFrequency(
                                    "A has content parallel to a sector direction that the small-angle cut did not "
                                    "remove");
                            }
                            // coefficient: f (Att + i s we At), At = c wa + s/r wb, Att = -r s wa + c wb
                            const cplx f = 2.0 * cfg.sign * wt / perp, iw = cplx(0, cfg.sign * we);
                            qu[q] = f * (wb + iw * wa);
                            qv[q] = f * (iw * wb / mr[q] - mr[q] * wa);
                            psi0 += qu[q].real();
                            any = true;
                        }
                    }
                    for (std::size_t p = 0; p < P; ++p) {
                        cplx z = amp * abc[p] * ed[p] * er[p];
                        if (any) {
                            double ph = psi0;
                            for (std::size_t q = 0; q < Q; ++q)
                                ph -= (qu[q] * ce[q * P + p] + qv[q] * se[q * P + p]).real();
                            z *= cplx(std::cos(ph), std::sin(ph));
                        }
                        K[p] += z;
                    }
                }
            }
        }
    const double vol = std::pow(L, kDim);
    auto fit = [](const std::vector<double>& x, const std::vector<double>& y, double* r2) {
        const std::size_t n = x.size();
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += x[i] / n;
            my += y[i] / n;
        }
        double sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxx += (x[i] - mx) * (x[i] - mx);
            sxy += (x[i] - mx) * (y[i] - my);
            syy += (y[i] - my) * (y[i] - my);
        }
        if (r2) *r2 = syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
        return sxx == 0 ? 0.0 : sxy / sxx;
    };
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < cfg.cone_times.size(); ++i) {
        const double t = cfg.cone_times[i], v = std::abs(K[i]) / vol;
        rep.cone.push_back({t, t, v});
        lx.push_back(0.5 * std::log1p(t * t));
        ly.push_back(std::log(v));
    }
    if (lx.size() >= 2) rep.cone_exponent = fit(lx, ly, &rep.cone_r_squared);
    lx.clear();
    ly.clear();
    for (std::size_t i = 0; i < cfg.offcone_gaps.size(); ++i) {
        const double gap = cfg.offcone_gaps[i], v = std::abs(K[cfg.cone_times.size() + i]) / vol;
        rep.offcone.push_back({cfg.offcone_time, cfg.offcone_time + gap, v});
        lx.push_back(0.5 * std::log1p(gap * gap));
        ly.push_back(std::log(v));
    }
    if (lx.size() >= 2) rep.offcone_exponent = fit(lx, ly, nullptr);
    return rep;
}

}  // namespace mkg
