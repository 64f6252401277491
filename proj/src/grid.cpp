#include "mkg/grid.hpp"

#include <cmath>
#include <string>

#include "mkg/errors.hpp"

namespace mkg {

namespace {
bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }
}  // namespace

void GridSpec::validate() const {
    if (!is_pow2(n) || n < 2) throw InvalidArgument("grid.n must be a power of two >= 2, got " + std::to_string(n));
    if (!is_pow2(nt)) throw InvalidArgument("grid.nt must be a power of two, got " + std::to_string(nt));
    if (!(period > 0) || !std::isfinite(period)) throw InvalidArgument("grid.period must be positive");
    if (!(window > 0) || !std::isfinite(window)) throw InvalidArgument("grid.window must be positive");
}

int GridSpec::k_min() const { return int(std::floor(std::log2(xi_unit()))) - 1; }

int GridSpec::k_max() const { return int(std::ceil(std::log2(xi_unit() * n))) + 1; }

GridSpec GridSpec::rescaled(double lambda) const {
    if (!(lambda > 0)) throw InvalidArgument("rescale factor must be positive");
    GridSpec g = *this;
    const double nn = n / lambda;
    if (std::abs(nn - std::round(nn)) > 1e-12 || !is_pow2(int(std::round(nn))) || std::round(nn) < 2)
        throw InvalidArgument("rescale factor must map N to a power of two");
    g.n = int(std::round(nn));
    g.period = period / lambda;
    g.window = window / lambda;
    return g;
}

AxisWavenumbers AxisWavenumbers::make(int n, double unit) {
    AxisWavenumbers w;
    w.full.resize(n);
    w.deriv.resize(n);
    for (int i = 0; i < n; ++i) {
        const int s = signed_index(i, n);
        w.full[i] = unit * s;
        w.deriv[i] = (n % 2 == 0 && i == n / 2) ? 0.0 : unit * s;
    }
    return w;
}

Vec4 position(const GridSpec& g, std::size_t idx) {
    Vec4 x{};
    for (int a = kDim - 1; a >= 0; --a) {
        x[a] = g.dx() * double(idx % g.n);
        idx /= g.n;
    }
    return x;
}

}  // namespace mkg
