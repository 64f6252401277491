#include "mkg/random_data.hpp"

#include <cmath>
#include <random>

#include "mkg/fft.hpp"
#include "mkg/multipliers.hpp"

namespace mkg {

namespace {

SpatialField band_field(const GridSpec& g, std::mt19937_64& rng, int kmin, int kmax, double power, bool real) {
    std::normal_distribution<double> nd;
    SpatialSpectrum c(g);
    const double lo = std::ldexp(1.0, kmin), hi = std::ldexp(1.0, kmax);
    for_each_mode(g, [&](std::size_t i, const Vec4& xi, const Vec4& xd) {
        const double a = nd(rng), b = nd(rng);
        const double r = norm(xi);
        // Nyquist modes are skipped so the data is alias-free for spectral derivatives.
        if (r < lo || r > hi || norm(xd) != r) return;
        c[i] = cplx(a, b) * std::pow(r, power);
    });
    auto f = ifft(c);
    return real ? real_part(f) : f;
}

double grad_sq(const SpatialField& f) {
    double s = 0;
    for (int d = 0; d < kDim; ++d) s += std::pow(l2_norm(partial(f, d)), 2);
    return s;
}

}  // namespace

double energy_norm(const GaugeState& s) {
    double e = grad_sq(s.phi) + std::pow(l2_norm(s.dtphi), 2);
    for (int d = 0; d < kDim; ++d) e += grad_sq(s.A[d]) + std::pow(l2_norm(s.dtA[d]), 2);
    return std::sqrt(e);
}

void neutralize_charge(SpatialField& phi, SpatialField& dtphi) {
    EllipticOptions eo;
    eo.mean = MeanPolicy::project;
    double rho = 0;
    for (const auto& x : phi.v) rho += std::norm(x);
    rho /= double(phi.size());
    if (rho == 0) return;
    SpatialField a0(phi.grid, Parity::real);
    for (int it = 0; it < 50; ++it) {
        a0 = solve_A0(phi, dtphi, eo, &a0);
        const auto j0 = charge_density(phi, dtphi, a0);
        const double m = mean(j0).real();
        if (std::abs(m) <= 1e-15 * std::max(max_abs(j0), 1e-300)) return;
        const double c = -m / rho;
        for (std::size_t i = 0; i < phi.size(); ++i) dtphi[i] += cplx(0, c) * phi[i];
    }
}

GaugeState generate_data(const GridSpec& g, const DataSpec& spec) {
    g.validate();
    if (spec.kmin > spec.kmax) throw InvalidArgument("data.kmin must not exceed data.kmax");
    if (!(spec.eps >= 0)) throw InvalidArgument("data amplitude must be non-negative");
    std::mt19937_64 rng(spec.seed);
    GaugeState raw = GaugeState::zero(g);
    raw.phi = band_field(g, rng, spec.kmin, spec.kmax, -2.0, false);
    raw.dtphi = band_field(g, rng, spec.kmin, spec.kmax, -1.0, false);
    if (spec.with_field) {
        for (int d = 0; d < kDim; ++d) {
            raw.A[d] = band_field(g, rng, spec.kmin, spec.kmax, -2.0, true);
            raw.dtA[d] = band_field(g, rng, spec.kmin, spec.kmax, -1.0, true);
        }
        raw.A = leray(raw.A);
        raw.dtA = leray(raw.dtA);
        for (int d = 0; d < kDim; ++d) raw.A[d] = real_part(raw.A[d]), raw.dtA[d] = real_part(raw.dtA[d]);
    }
    const double n0 = energy_norm(raw);
    if (n0 == 0) throw InvalidArgument("data band contains no lattice modes");
    if (spec.eps == 0) return GaugeState::zero(g);
    GaugeState s = raw;
    for (int pass = 0; pass < 3; ++pass) {
        const double sc = spec.eps / energy_norm(s);
        s.phi *= sc;
        s.dtphi *= sc;
        for (int d = 0; d < kDim; ++d) s.A[d] *= sc, s.dtA[d] *= sc;
        neutralize_charge(s.phi, s.dtphi);
    }
    return prepare_data(s.A, s.dtA, s.phi, s.dtphi);
}

SpacetimeField guarded_trace(const GridSpec& g, std::uint64_t seed, int band, int tband, double eta) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    SpacetimeSpectrum c(g);
    const auto& mod = bank(g).modulation();
    for_each_spacetime_mode(g, [&](std::size_t i, double tau, double, const Vec4& xi, const Vec4&) {
        const double a = nd(rng), b = nd(rng);
        bool in = std::abs(tau) <= tband * g.tau_unit() + 1e-9 && norm(xi) > 0 && mod[i] >= eta;
        for (int d = 0; d < kDim; ++d) in = in && std::abs(xi[d]) <= band * g.xi_unit() + 1e-9;
        if (in) c[i] = {a, b};
    });
    return ifft(c);
}

}  // namespace mkg
