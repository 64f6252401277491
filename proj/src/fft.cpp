#include "mkg/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace mkg {

namespace {

// In-place plans keyed by (nt, n, sign). nt == 0 means a spatial transform.
class PlanCache {
public:
    fftw_plan get(int nt, int n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        const auto key = std::make_tuple(nt, n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        const std::size_t total = std::size_t(n) * n * n * n * std::size_t(nt == 0 ? 1 : nt);
        auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
        fftw_plan p;
        if (nt == 0) {
            const int dims[4] = {n, n, n, n};
            p = fftw_plan_dft(4, dims, scratch, scratch, sign, FFTW_ESTIMATE);
        } else {
            const int dims[5] = {nt, n, n, n, n};
            p = fftw_plan_dft(5, dims, scratch, scratch, sign, FFTW_ESTIMATE);
        }
        fftw_free(scratch);
        if (!p) throw Error("FftError", "plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(int nt, int n, int sign, Buffer& data) {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(nt, n, sign), p, p);
}

}  // namespace

SpatialSpectrum fft(const SpatialField& f) {
    SpatialSpectrum c(f.grid, f.parity);
    c.v = f.v;
    run(0, f.grid.n, FFTW_FORWARD, c.v);
    const double s = 1.0 / double(c.size());
    for (auto& x : c.v) x *= s;
    return c;
}

SpatialField ifft(const SpatialSpectrum& c, Parity parity) {
    SpatialField f(c.grid, parity);
    f.v = c.v;
    run(0, c.grid.n, FFTW_BACKWARD, f.v);
    if (parity == Parity::real)
        for (auto& x : f.v) x = x.real();
    return f;
}

SpacetimeSpectrum fft(const SpacetimeField& f) {
    SpacetimeSpectrum c(f.grid, f.parity);
    c.v = f.v;
    run(f.grid.nt, f.grid.n, FFTW_FORWARD, c.v);
    const double s = 1.0 / double(c.size());
    for (auto& x : c.v) x *= s;
    return c;
}

SpacetimeField ifft(const SpacetimeSpectrum& c, Parity parity) {
    SpacetimeField f(c.grid, parity);
    f.v = c.v;
    run(c.grid.nt, c.grid.n, FFTW_BACKWARD, f.v);
    if (parity == Parity::real)
        for (auto& x : f.v) x = x.real();
    return f;
}

double hermitian_defect(const SpatialSpectrum& c) {
    const GridSpec& g = c.grid;
    double mx = 0, d = 0;
    for (const auto& x : c.v) mx = std::max(mx, std::abs(x));
    if (mx == 0) return 0;
    std::size_t idx = 0;
    for (int a = 0; a < g.n; ++a)
        for (int b = 0; b < g.n; ++b)
            for (int e = 0; e < g.n; ++e)
                for (int h = 0; h < g.n; ++h, ++idx) {
                    const std::size_t j = mode_index(g, {-a, -b, -e, -h});
                    d = std::max(d, std::abs(c[idx] - std::conj(c[j])));
                }
    return d / mx;
}

}  // namespace mkg
