#include "mkg/field.hpp"

#include <fftw3.h>

#include <cmath>

namespace mkg {

void* aligned_alloc_bytes(std::size_t bytes) {
    void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
    if (!p) throw std::bad_alloc();
    return p;
}

void aligned_free_bytes(void* p) noexcept { fftw_free(p); }

VectorField zero_vector(const GridSpec& g, Parity p) {
    return {SpatialField(g, p), SpatialField(g, p), SpatialField(g, p), SpatialField(g, p)};
}

double l2_norm(const SpatialField& f) {
    double s = 0;
    for (const auto& x : f.v) s += std::norm(x);
    return std::sqrt(s * f.grid.cell_volume());
}

double l2_norm(const VectorField& f) {
    double s = 0;
    for (const auto& c : f) s += std::pow(l2_norm(c), 2);
    return std::sqrt(s);
}

double l2_norm(const SpatialSpectrum& c) {
    double s = 0;
    for (const auto& x : c.v) s += std::norm(x);
    return std::sqrt(s * c.grid.volume());
}

double l2_norm(const SpacetimeField& f) {
    double s = 0;
    for (const auto& x : f.v) s += std::norm(x);
    return std::sqrt(s * f.grid.cell_volume() * f.grid.dt());
}

cplx inner(const SpatialField& a, const SpatialField& b) {
    a.check_same(b);
    cplx s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s * a.grid.cell_volume();
}

double max_abs(const SpatialField& f) {
    double m = 0;
    for (const auto& x : f.v) m = std::max(m, std::abs(x));
    return m;
}

double max_abs(const SpacetimeField& f) {
    double m = 0;
    for (const auto& x : f.v) m = std::max(m, std::abs(x));
    return m;
}

cplx mean(const SpatialField& f) {
    cplx s = 0;
    for (const auto& x : f.v) s += x;
    return s / double(f.size());
}

SpatialField time_slice(const SpacetimeField& F, int m) {
    if (m < 0 || m >= F.grid.nt) throw InvalidArgument("time index out of range");
    SpatialField f(F.grid, F.parity);
    const std::size_t n = F.grid.spatial_size();
    std::copy(F.v.begin() + n * m, F.v.begin() + n * (m + 1), f.v.begin());
    return f;
}

void set_time_slice(SpacetimeField& F, int m, const SpatialField& f) {
    if (!F.grid.same_space(f.grid)) throw GridMismatch("slice grid differs from space-time grid");
    if (m < 0 || m >= F.grid.nt) throw InvalidArgument("time index out of range");
    const std::size_t n = F.grid.spatial_size();
    std::copy(f.v.begin(), f.v.end(), F.v.begin() + n * m);
    if (f.parity == Parity::complex) F.parity = Parity::complex;
}

SpatialField real_part(const SpatialField& f) {
    SpatialField r(f.grid, Parity::real);
    for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
    return r;
}

SpatialField pointwise(const SpatialField& a, const SpatialField& b) {
    a.check_same(b);
    SpatialField r(a.grid, (a.parity == Parity::real && b.parity == Parity::real) ? Parity::real : Parity::complex);
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}

SpatialField conj(const SpatialField& a) {
    SpatialField r(a.grid, a.parity);
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::conj(a[i]);
    return r;
}

std::size_t mode_index(const GridSpec& g, const std::array<int, kDim>& n) {
    std::size_t idx = 0;
    for (int a = 0; a < kDim; ++a) {
        const int m = ((n[a] % g.n) + g.n) % g.n;
        idx = idx * g.n + std::size_t(m);
    }
    return idx;
}

SpatialField plane_wave(const GridSpec& g, const std::array<int, kDim>& n, cplx amp) {
    const double u = g.xi_unit();
    const Vec4 xi{u * n[0], u * n[1], u * n[2], u * n[3]};
    return sample(g, [&](const Vec4& x) { return amp * std::exp(cplx(0, dot(xi, x))); });
}

}  // namespace mkg
