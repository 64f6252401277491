#include "mkg/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace mkg {

namespace lp {

double smoothstep(double s) {
    if (s <= 0) return 0;
    if (s >= 1) return 1;
    return s * s * s * (s * (6 * s - 15) + 10);
}

double Phi(double s) { return 1.0 - smoothstep(s); }

double chi(double r) {
    if (!(r > 0)) return 0;
    const double s = std::log2(r);
    return Phi(s) - Phi(s + 1);
}

double low(double r) {
    if (r <= 0) return 1;
    return Phi(std::log2(r) + 1);
}

double widened(double r) { return chi(2 * r) + chi(r) + chi(0.5 * r); }

}  // namespace lp

namespace {

bool is_real_spectrum(const SpatialSpectrum& c) { return hermitian_defect(c) < 1e-12; }

double occupancy_cut(const Buffer& v) {
    double m = 0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return kOccupancy * m;
}

}  // namespace

SpatialField apply_spatial_multiplier(const SpatialField& f, const ScalarSymbol& m) {
    auto c = fft(f);
    const double cut = occupancy_cut(c.v);
    for_each_mode(f.grid, [&](std::size_t i, const Vec4& xi, const Vec4& xd) {
        const cplx s = m(xi, xd);
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            if (std::abs(c[i]) > cut) {
                std::ostringstream os;
                os << "symbol not finite at occupied mode |xi| = " << norm(xi);
                throw SingularSymbol(os.str());
            }
            c[i] = 0;
        } else {
            c[i] *= s;
        }
    });
    const Parity p = (f.parity == Parity::real && is_real_spectrum(c)) ? Parity::real : Parity::complex;
    return ifft(c, p);
}

VectorField apply_spatial_multiplier(const VectorField& f, const MatrixSymbol& m) {
    std::array<SpatialSpectrum, kDim> c;
    for (int a = 0; a < kDim; ++a) c[a] = fft(f[a]);
    double cut = 0;
    for (int a = 0; a < kDim; ++a) cut = std::max(cut, occupancy_cut(c[a].v));
    for_each_mode(f[0].grid, [&](std::size_t i, const Vec4& xi, const Vec4& xd) {
        const Mat4 s = m(xi, xd);
        std::array<cplx, kDim> in{}, out{};
        bool occupied = false;
        for (int a = 0; a < kDim; ++a) {
            in[a] = c[a][i];
            occupied = occupied || std::abs(in[a]) > cut;
        }
        for (int a = 0; a < kDim; ++a)
            for (int b = 0; b < kDim; ++b) {
                if (!std::isfinite(s[a][b].real()) || !std::isfinite(s[a][b].imag())) {
                    if (occupied) throw SingularSymbol("matrix symbol not finite at an occupied mode");
                    continue;
                }
                out[a] += s[a][b] * in[b];
            }
        for (int a = 0; a < kDim; ++a) c[a][i] = out[a];
    });
    VectorField r;
    for (int a = 0; a < kDim; ++a) {
        const Parity p = (f[a].parity == Parity::real && is_real_spectrum(c[a])) ? Parity::real : Parity::complex;
        r[a] = ifft(c[a], p);
    }
    return r;
}

SpacetimeField apply_spacetime_multiplier(const SpacetimeField& f, const SpacetimeSymbol& m) {
    auto c = fft(f);
    const double cut = occupancy_cut(c.v);
    for_each_spacetime_mode(f.grid, [&](std::size_t i, double tau, double td, const Vec4& xi, const Vec4& xd) {
        const cplx s = m(tau, td, xi, xd);
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            if (std::abs(c[i]) > cut) throw SingularSymbol("space-time symbol not finite at an occupied mode");
            c[i] = 0;
        } else {
            c[i] *= s;
        }
    });
    return ifft(c, Parity::complex);
}

// ---------------------------------------------------------------------------

MultiplierBank::MultiplierBank(const GridSpec& g) : grid_(g) {
    g.validate();
    radius_.resize(g.spatial_size());
    for_each_mode(g, [&](std::size_t i, const Vec4& xi, const Vec4&) { radius_[i] = norm(xi); });
}

const std::vector<double>& MultiplierBank::modulation() const {
    std::call_once(mod_once_, [this] {
        const std::size_t ns = grid_.spatial_size();
        const auto wt = AxisWavenumbers::make(grid_.nt, grid_.tau_unit());
        modulation_.resize(grid_.spacetime_size());
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (int m = 0; m < grid_.nt; ++m) {
            const double at = std::abs(wt.full[m]);
            for (std::size_t i = 0; i < ns; ++i) {
                double d = std::abs(at - radius_[i]);
                if (d < 1e-12 * std::max(1.0, at)) d = 0;  // exact cone mode
                modulation_[m * ns + i] = d;
                if (d > 0) lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
        }
        jmin_ = int(std::floor(std::log2(lo))) - 1;
        jmax_ = int(std::ceil(std::log2(hi))) + 1;
    });
    return modulation_;
}

int MultiplierBank::j_min() const {
    modulation();
    return jmin_;
}

int MultiplierBank::j_max() const {
    modulation();
    return jmax_;
}

std::vector<double> MultiplierBank::pk_symbol(int k) const {
    std::vector<double> s(radius_.size());
    const double sc = std::ldexp(1.0, -k);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = lp::chi(radius_[i] * sc);
    return s;
}

std::vector<double> MultiplierBank::p_less_symbol(int k) const {
    std::vector<double> s(radius_.size());
    const double sc = std::ldexp(1.0, -k);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = lp::low(radius_[i] * sc);
    return s;
}

std::vector<double> MultiplierBank::p_tilde_symbol(int k) const {
    std::vector<double> s(radius_.size());
    const double sc = std::ldexp(1.0, -k);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = lp::widened(radius_[i] * sc);
    return s;
}

std::vector<double> MultiplierBank::qj_symbol(int j) const {
    const auto& mod = modulation();
    std::vector<double> s(mod.size());
    const double sc = std::ldexp(1.0, -j);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = lp::chi(mod[i] * sc);
    return s;
}

std::vector<double> MultiplierBank::q_less_symbol(int j) const {
    const auto& mod = modulation();
    std::vector<double> s(mod.size());
    const double sc = std::ldexp(1.0, -j);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = lp::low(mod[i] * sc);
    return s;
}

const MultiplierBank& bank(const GridSpec& g) {
    struct Key {
        int n, nt;
        double l, t;
        bool operator<(const Key& o) const { return std::tie(n, nt, l, t) < std::tie(o.n, o.nt, o.l, o.t); }
    };
    static std::mutex mu;
    static std::map<Key, std::unique_ptr<MultiplierBank>> banks;
    std::lock_guard<std::mutex> lock(mu);
    const Key key{g.n, g.nt, g.period, g.window};
    auto it = banks.find(key);
    if (it == banks.end()) {
        GridSpec gg = g;
        gg.taper = Taper::none;
        it = banks.emplace(key, std::make_unique<MultiplierBank>(gg)).first;
    }
    return *it->second;
}

// ---------------------------------------------------------------------------

void multiply(SpatialSpectrum& c, const std::vector<double>& t) {
    if (t.size() != c.size()) throw GridMismatch("symbol table size mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) c[i] *= t[i];
}

void multiply(SpacetimeSpectrum& c, const std::vector<double>& t) {
    if (t.size() != c.size()) throw GridMismatch("symbol table size mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) c[i] *= t[i];
}

SpatialField apply_table(const SpatialField& f, const std::vector<double>& t) {
    auto c = fft(f);
    multiply(c, t);
    return ifft(c, f.parity);
}

SpacetimeField apply_table(const SpacetimeField& f, const std::vector<double>& t) {
    auto c = fft(f);
    multiply(c, t);
    return ifft(c, f.parity);
}

SpacetimeField apply_spatial_table(const SpacetimeField& f, const std::vector<double>& t) {
    const std::size_t ns = f.grid.spatial_size();
    if (t.size() != ns) throw GridMismatch("symbol table size mismatch");
    auto c = fft(f);
    for (int m = 0; m < f.grid.nt; ++m)
        for (std::size_t i = 0; i < ns; ++i) c[m * ns + i] *= t[i];
    return ifft(c, f.parity);
}

// ---------------------------------------------------------------------------

SpatialField pk(const SpatialField& f, int k, OpFlags* flags) {
    const auto& b = bank(f.grid);
    if (k < b.k_min() || k > b.k_max()) {
        if (flags) flags->out_of_range = true;
        return f.zeros_like();
    }
    return apply_table(f, b.pk_symbol(k));
}

SpatialField p_less(const SpatialField& f, int k) { return apply_table(f, bank(f.grid).p_less_symbol(k)); }

SpatialField p_geq(const SpatialField& f, int k) {
    auto s = bank(f.grid).p_less_symbol(k);
    for (auto& x : s) x = 1.0 - x;
    return apply_table(f, s);
}

SpatialField p_tilde(const SpatialField& f, int k) { return apply_table(f, bank(f.grid).p_tilde_symbol(k)); }

SpacetimeField pk(const SpacetimeField& f, int k, OpFlags* flags) {
    const auto& b = bank(f.grid);
    if (k < b.k_min() || k > b.k_max()) {
        if (flags) flags->out_of_range = true;
        return f.zeros_like();
    }
    return apply_spatial_table(f, b.pk_symbol(k));
}

SpacetimeField p_less(const SpacetimeField& f, int k) {
    return apply_spatial_table(f, bank(f.grid).p_less_symbol(k));
}

SpacetimeField p_geq(const SpacetimeField& f, int k) {
    auto s = bank(f.grid).p_less_symbol(k);
    for (auto& x : s) x = 1.0 - x;
    return apply_spatial_table(f, s);
}

SpacetimeField apply_taper(const SpacetimeField& F) {
    if (F.grid.taper == Taper::none) return F;
    SpacetimeField r = F;
    const std::size_t ns = F.grid.spatial_size();
    for (int m = 0; m < F.grid.nt; ++m) {
        const double w = std::pow(std::sin(std::numbers::pi * m / F.grid.nt), 2);
        for (std::size_t i = 0; i < ns; ++i) r[m * ns + i] *= w;
    }
    return r;
}

SpacetimeField qj(const SpacetimeField& F, int j) {
    return apply_table(apply_taper(F), bank(F.grid).qj_symbol(j));
}

SpacetimeField q_less(const SpacetimeField& F, int j) {
    return apply_table(apply_taper(F), bank(F.grid).q_less_symbol(j));
}

SpacetimeField q_geq(const SpacetimeField& F, int j) {
    auto s = bank(F.grid).q_less_symbol(j);
    for (auto& x : s) x = 1.0 - x;
    return apply_table(apply_taper(F), s);
}

// ---------------------------------------------------------------------------

namespace {

template <class Spec>
void apply_inverse_radial(Spec& c, const std::vector<double>& radius, double power, ZeroMode zm, OpFlags* flags,
                          double sign) {
    const std::size_t ns = radius.size();
    const std::size_t blocks = c.size() / ns;
    const double cut = occupancy_cut(c.v);
    for (std::size_t m = 0; m < blocks; ++m)
        for (std::size_t i = 0; i < ns; ++i) {
            cplx& x = c[m * ns + i];
            if (radius[i] == 0) {
                if (std::abs(x) > cut && x != cplx{}) {
                    if (zm == ZeroMode::error) throw SingularSymbol("zero mode is occupied (nonzero mean)");
                    if (zm == ZeroMode::pass) {
                        if (flags) flags->mean_passed = true;
                        continue;
                    }
                }
                if (zm != ZeroMode::pass) x = 0;
                continue;
            }
            x *= sign / std::pow(radius[i], power);
        }
}

}  // namespace

SpatialField partial(const SpatialField& f, int axis) {
    if (axis < 0 || axis >= kDim) throw InvalidArgument("axis out of range");
    auto c = fft(f);
    for_each_mode(f.grid, [&](std::size_t i, const Vec4&, const Vec4& xd) { c[i] *= cplx(0, xd[axis]); });
    return ifft(c, f.parity);
}

SpatialField laplacian(const SpatialField& f) {
    auto c = fft(f);
    const auto& r = bank(f.grid).radius();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -r[i] * r[i];
    return ifft(c, f.parity);
}

SpatialField abs_d(const SpatialField& f) {
    auto c = fft(f);
    const auto& r = bank(f.grid).radius();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= r[i];
    return ifft(c, f.parity);
}

SpatialField inv_abs_d(const SpatialField& f, ZeroMode zm, OpFlags* flags) {
    auto c = fft(f);
    apply_inverse_radial(c, bank(f.grid).radius(), 1.0, zm, flags, 1.0);
    return ifft(c, f.parity);
}

SpatialField inv_laplacian(const SpatialField& f, ZeroMode zm, OpFlags* flags) {
    auto c = fft(f);
    apply_inverse_radial(c, bank(f.grid).radius(), 2.0, zm, flags, -1.0);
    return ifft(c, f.parity);
}

SpacetimeField inv_laplacian(const SpacetimeField& f, ZeroMode zm, OpFlags* flags) {
    auto c = fft(f);
    apply_inverse_radial(c, bank(f.grid).radius(), 2.0, zm, flags, -1.0);
    return ifft(c, f.parity);
}

SpatialField divergence(const VectorField& a) {
    SpatialSpectrum acc(a[0].grid);
    for (int d = 0; d < kDim; ++d) {
        auto c = fft(a[d]);
        for_each_mode(a[d].grid, [&](std::size_t i, const Vec4&, const Vec4& xd) { acc[i] += cplx(0, xd[d]) * c[i]; });
    }
    bool real = true;
    for (const auto& x : a) real = real && x.parity == Parity::real;
    return ifft(acc, real ? Parity::real : Parity::complex);
}

VectorField gradient(const SpatialField& f) {
    VectorField g;
    for (int d = 0; d < kDim; ++d) g[d] = partial(f, d);
    return g;
}

SpacetimeField partial(const SpacetimeField& f, int axis) {
    if (axis < 0 || axis >= kDim) throw InvalidArgument("axis out of range");
    auto c = fft(f);
    const std::size_t ns = f.grid.spatial_size();
    std::vector<double> k(ns);
    for_each_mode(f.grid, [&](std::size_t i, const Vec4&, const Vec4& xd) { k[i] = xd[axis]; });
    for (int m = 0; m < f.grid.nt; ++m)
        for (std::size_t i = 0; i < ns; ++i) c[m * ns + i] *= cplx(0, k[i]);
    return ifft(c, f.parity);
}

SpacetimeField partial_t(const SpacetimeField& f) {
    auto c = fft(f);
    const std::size_t ns = f.grid.spatial_size();
    const auto wt = AxisWavenumbers::make(f.grid.nt, f.grid.tau_unit());
    for (int m = 0; m < f.grid.nt; ++m)
        for (std::size_t i = 0; i < ns; ++i) c[m * ns + i] *= cplx(0, wt.deriv[m]);
    return ifft(c, f.parity);
}

SpacetimeField laplacian(const SpacetimeField& f) {
    const auto& r = bank(f.grid).radius();
    std::vector<double> s(r.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = -r[i] * r[i];
    return apply_spatial_table(f, s);
}

Mat4 leray_symbol(const Vec4& xd) {
    Mat4 m{};
    const double r2 = dot(xd, xd);
    for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < kDim; ++b) m[a][b] = (a == b ? 1.0 : 0.0) - (r2 > 0 ? xd[a] * xd[b] / r2 : 0.0);
    return m;
}

VectorField leray(const VectorField& a, OpFlags* flags) {
    if (flags) {
        for (const auto& c : a)
            if (std::abs(mean(c)) > 1e-14 * std::max(1.0, max_abs(c))) flags->mean_passed = true;
    }
    return apply_spatial_multiplier(a, [](const Vec4&, const Vec4& xd) { return leray_symbol(xd); });
}

VectorSpacetimeField leray(const VectorSpacetimeField& a) {
    const GridSpec& g = a[0].grid;
    std::array<SpacetimeSpectrum, kDim> c;
    for (int d = 0; d < kDim; ++d) c[d] = fft(a[d]);
    const std::size_t ns = g.spatial_size();
    std::vector<Vec4> kd(ns);
    for_each_mode(g, [&](std::size_t i, const Vec4&, const Vec4& xd) { kd[i] = xd; });
    for (int m = 0; m < g.nt; ++m)
        for (std::size_t i = 0; i < ns; ++i) {
            const Mat4 s = leray_symbol(kd[i]);
            std::array<cplx, kDim> in{}, out{};
            for (int d = 0; d < kDim; ++d) in[d] = c[d][m * ns + i];
            for (int p = 0; p < kDim; ++p)
                for (int q = 0; q < kDim; ++q) out[p] += s[p][q] * in[q];
            for (int d = 0; d < kDim; ++d) c[d][m * ns + i] = out[d];
        }
    VectorSpacetimeField r;
    for (int d = 0; d < kDim; ++d) r[d] = ifft(c[d], a[d].parity);
    return r;
}

// ---------------------------------------------------------------------------

double default_eta(const GridSpec& g) { return 4.0 * g.tau_unit(); }

SpacetimeField box(const SpacetimeField& F) {
    auto c = fft(F);
    const GridSpec& g = F.grid;
    const std::size_t ns = g.spatial_size();
    const auto& r = bank(g).radius();
    const auto wt = AxisWavenumbers::make(g.nt, g.tau_unit());
    for (int m = 0; m < g.nt; ++m)
        for (std::size_t i = 0; i < ns; ++i) c[m * ns + i] *= wt.full[m] * wt.full[m] - r[i] * r[i];
    return ifft(c, F.parity);
}

bool violates_guard(const SpacetimeField& F, double eta, double* tau, double* xi) {
    const GridSpec& g = F.grid;
    if (eta < 0) eta = default_eta(g);
    auto c = fft(F);
    const double cut = occupancy_cut(c.v);
    const auto& mod = bank(g).modulation();
    const auto& r = bank(g).radius();
    const std::size_t ns = g.spatial_size();
    const auto wt = AxisWavenumbers::make(g.nt, g.tau_unit());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::abs(c[i]) <= cut || c[i] == cplx{}) continue;
        if (mod[i] < eta || r[i % ns] == 0) {
            if (tau) *tau = wt.full[i / ns];
            if (xi) *xi = r[i % ns];
            return true;
        }
    }
    return false;
}

SpacetimeField inv_box(const SpacetimeField& F, double eta) {
    const GridSpec& g = F.grid;
    if (eta < 0) eta = default_eta(g);
    auto c = fft(F);
    const double cut = occupancy_cut(c.v);
    const auto& mod = bank(g).modulation();
    const auto& r = bank(g).radius();
    const std::size_t ns = g.spatial_size();
    const auto wt = AxisWavenumbers::make(g.nt, g.tau_unit());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double tau = wt.full[i / ns];
        const double rr = r[i % ns];
        if (mod[i] < eta) {
            if (std::abs(c[i]) > cut && c[i] != cplx{}) {
                std::ostringstream os;
                os << "occupied mode inside the cone guard at tau = " << tau << ", |xi| = " << rr
                   << " (||tau|-|xi|| = " << mod[i] << " < eta = " << eta << ")";
                throw ConeResonance(os.str(), tau, rr);
            }
            c[i] = 0;
            continue;
        }
        c[i] /= tau * tau - rr * rr;
    }
    return ifft(c, F.parity);
}

SpacetimeField cone_guard(const SpacetimeField& F, double eta) {
    const GridSpec& g = F.grid;
    if (eta < 0) eta = default_eta(g);
    auto c = fft(F);
    const auto& mod = bank(g).modulation();
    const auto& r = bank(g).radius();
    const std::size_t ns = g.spatial_size();
    for (std::size_t i = 0; i < c.size(); ++i)
        if (mod[i] < eta || r[i % ns] == 0) c[i] = 0;
    return ifft(c, F.parity);
}

}  // namespace mkg
