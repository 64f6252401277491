#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <new>
#include <type_traits>
#include <vector>

#include "mkg/errors.hpp"
#include "mkg/grid.hpp"

namespace mkg {

using cplx = std::complex<double>;

void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free_bytes(void* p) noexcept;

// SIMD-aligned storage so FFT plans made on one buffer are valid on any other.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(std::size_t n) { return static_cast<T*>(aligned_alloc_bytes(n * sizeof(T))); }
    void deallocate(T* p, std::size_t) noexcept { aligned_free_bytes(p); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Buffer = std::vector<cplx, AlignedAllocator<cplx>>;

enum class Parity { real, complex };

namespace detail {
struct SpaceTag {};
struct SpacetimeTag {};
struct SpaceSpecTag {};
struct SpacetimeSpecTag {};
}  // namespace detail

// Samples (or Fourier coefficients) on the lattice described by `grid`.
// Physical arrays are indexed x1-slowest; space-time arrays carry time as the
// slowest axis. Spectra hold mode amplitudes: f(x) = sum_xi c_xi e^{i xi.x}.
template <class Tag>
struct Lattice {
    GridSpec grid;
    Buffer v;
    Parity parity = Parity::complex;

    Lattice() = default;
    explicit Lattice(const GridSpec& g, Parity p = Parity::complex)
        : grid(g), v(size_for(g), cplx{}), parity(p) {}

    static std::size_t size_for(const GridSpec& g) {
        if constexpr (std::is_same_v<Tag, detail::SpaceTag> || std::is_same_v<Tag, detail::SpaceSpecTag>)
            return g.spatial_size();
        else
            return g.spacetime_size();
    }

    static constexpr bool is_spatial() {
        return std::is_same_v<Tag, detail::SpaceTag> || std::is_same_v<Tag, detail::SpaceSpecTag>;
    }
    std::size_t size() const { return v.size(); }
    cplx& operator[](std::size_t i) { return v[i]; }
    const cplx& operator[](std::size_t i) const { return v[i]; }

    void check_same(const Lattice& o) const {
        const bool same = is_spatial() ? grid.same_space(o.grid) : grid.same_spacetime(o.grid);
        if (!same || v.size() != o.v.size())
            throw GridMismatch("operands live on different grids");
    }
    Lattice& operator+=(const Lattice& o) {
        check_same(o);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        if (o.parity == Parity::complex) parity = Parity::complex;
        return *this;
    }
    Lattice& operator-=(const Lattice& o) {
        check_same(o);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
        if (o.parity == Parity::complex) parity = Parity::complex;
        return *this;
    }
    Lattice& operator*=(cplx a) {
        for (auto& x : v) x *= a;
        if (a.imag() != 0.0) parity = Parity::complex;
        return *this;
    }
    Lattice& operator*=(double a) {
        for (auto& x : v) x *= a;
        return *this;
    }
    // this += a * o
    Lattice& axpy(cplx a, const Lattice& o) {
        check_same(o);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * o.v[i];
        if (o.parity == Parity::complex || a.imag() != 0.0) parity = Parity::complex;
        return *this;
    }
    friend Lattice operator+(Lattice a, const Lattice& b) { return a += b; }
    friend Lattice operator-(Lattice a, const Lattice& b) { return a -= b; }
    friend Lattice operator*(cplx s, Lattice a) { return a *= s; }
    friend Lattice operator*(double s, Lattice a) { return a *= s; }

    Lattice zeros_like() const { return Lattice(grid, parity); }
};

using SpatialField = Lattice<detail::SpaceTag>;
using SpacetimeField = Lattice<detail::SpacetimeTag>;
using SpatialSpectrum = Lattice<detail::SpaceSpecTag>;
using SpacetimeSpectrum = Lattice<detail::SpacetimeSpecTag>;

using VectorField = std::array<SpatialField, kDim>;
using VectorSpacetimeField = std::array<SpacetimeField, kDim>;

VectorField zero_vector(const GridSpec& g, Parity p = Parity::real);

// L^2(T^4) norm computed from samples: (dx^4 sum |f|^2)^{1/2}.
double l2_norm(const SpatialField& f);
double l2_norm(const VectorField& f);
// Spectral side of Plancherel: (L^4 sum |c|^2)^{1/2}.
double l2_norm(const SpatialSpectrum& c);
// L^2 over the time window and the torus.
double l2_norm(const SpacetimeField& f);
cplx inner(const SpatialField& a, const SpatialField& b);  // int a conj(b)
double max_abs(const SpatialField& f);
double max_abs(const SpacetimeField& f);
cplx mean(const SpatialField& f);

SpatialField time_slice(const SpacetimeField& F, int m);
void set_time_slice(SpacetimeField& F, int m, const SpatialField& f);

// Real part, discarding roundoff imaginary parts of real-parity fields.
SpatialField real_part(const SpatialField& f);

// Pointwise products and conjugation.
SpatialField pointwise(const SpatialField& a, const SpatialField& b);
SpatialField conj(const SpatialField& a);

// Evaluate f at each lattice point.
template <class F>
SpatialField sample(const GridSpec& g, F&& f, Parity p = Parity::complex) {
    SpatialField out(g, p);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(position(g, i));
    return out;
}

// Plane wave e^{i xi.x} for integer lattice index `n`.
SpatialField plane_wave(const GridSpec& g, const std::array<int, kDim>& n, cplx amp = 1.0);

// Flat index of the mode with signed integer lattice indices `n`.
std::size_t mode_index(const GridSpec& g, const std::array<int, kDim>& n);

}  // namespace mkg
