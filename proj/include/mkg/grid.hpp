#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace mkg {

inline constexpr int kDim = 4;  // spatial dimension, fixed
using Vec4 = std::array<double, kDim>;

enum class Taper { none, hann };

// Periodic space-time sampling: N^4 points on [0,L)^4, Nt samples on [0,T).
struct GridSpec {
    int n = 16;
    double period = 2.0 * std::numbers::pi;
    int nt = 64;
    double window = 1.0;
    Taper taper = Taper::none;

    void validate() const;

    std::size_t spatial_size() const { return std::size_t(n) * n * n * n; }
    std::size_t spacetime_size() const { return spatial_size() * std::size_t(nt); }
    double dx() const { return period / n; }
    double dt() const { return window / nt; }
    double cell_volume() const { return std::pow(dx(), kDim); }
    double volume() const { return std::pow(period, kDim); }
    double xi_unit() const { return 2.0 * std::numbers::pi / period; }
    double tau_unit() const { return 2.0 * std::numbers::pi / window; }

    // Resolvable dyadic range for spatial frequencies (P_k non-empty on the lattice).
    int k_min() const;
    int k_max() const;

    // Companion grid for the rescaling x -> lambda x: same spacing, N/lambda points.
    GridSpec rescaled(double lambda) const;

    bool same_space(const GridSpec& o) const { return n == o.n && period == o.period; }
    bool same_spacetime(const GridSpec& o) const {
        return same_space(o) && nt == o.nt && window == o.window;
    }
    bool operator==(const GridSpec&) const = default;
};

inline int signed_index(int i, int n) { return i < n / 2 ? i : i - n; }

// Per-axis wavenumbers. `full` keeps the Nyquist entry (used by even symbols such
// as |xi|); `deriv` zeroes it (odd symbols: derivatives, Leray numerators).
struct AxisWavenumbers {
    std::vector<double> full;
    std::vector<double> deriv;
    static AxisWavenumbers make(int n, double unit);
};

inline double norm(const Vec4& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
}
inline double dot(const Vec4& a, const Vec4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Iterate all spatial lattice modes in storage order (x1 slowest).
// f(std::size_t index, const Vec4& xi_full, const Vec4& xi_deriv)
template <class F>
void for_each_mode(const GridSpec& g, F&& f) {
    const auto w = AxisWavenumbers::make(g.n, g.xi_unit());
    std::size_t idx = 0;
    for (int a = 0; a < g.n; ++a)
        for (int b = 0; b < g.n; ++b)
            for (int c = 0; c < g.n; ++c)
                for (int d = 0; d < g.n; ++d, ++idx) {
                    const Vec4 xf{w.full[a], w.full[b], w.full[c], w.full[d]};
                    const Vec4 xd{w.deriv[a], w.deriv[b], w.deriv[c], w.deriv[d]};
                    f(idx, xf, xd);
                }
}

// Iterate space-time modes (time slowest).
// f(std::size_t index, double tau_full, double tau_deriv, const Vec4& xi_full, const Vec4& xi_deriv)
template <class F>
void for_each_spacetime_mode(const GridSpec& g, F&& f) {
    const auto w = AxisWavenumbers::make(g.n, g.xi_unit());
    const auto wt = AxisWavenumbers::make(g.nt, g.tau_unit());
    std::size_t idx = 0;
    for (int m = 0; m < g.nt; ++m)
        for (int a = 0; a < g.n; ++a)
            for (int b = 0; b < g.n; ++b)
                for (int c = 0; c < g.n; ++c)
                    for (int d = 0; d < g.n; ++d, ++idx) {
                        const Vec4 xf{w.full[a], w.full[b], w.full[c], w.full[d]};
                        const Vec4 xd{w.deriv[a], w.deriv[b], w.deriv[c], w.deriv[d]};
                        f(idx, wt.full[m], wt.deriv[m], xf, xd);
                    }
}

// Physical coordinates of spatial sample `idx`.
Vec4 position(const GridSpec& g, std::size_t idx);

}  // namespace mkg
