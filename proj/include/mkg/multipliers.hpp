#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "mkg/field.hpp"
#include "mkg/fft.hpp"

namespace mkg {

// Littlewood-Paley profile. Phi is the C^2 quintic step in log2-scale:
// Phi(s) = 1 for s <= 0, 0 for s >= 1.
namespace lp {
double smoothstep(double s);
double Phi(double s);
// chi(r) = Phi(log2 r) - Phi(log2 r + 1): supported in [1/2, 2], chi(1) = 1,
// sum_k chi(r / 2^k) = 1 for r > 0.
double chi(double r);
// sum_{k<0} chi(r / 2^k) = Phi(log2 r + 1), with low(0) = 1.
double low(double r);
// chi(2r) + chi(r) + chi(r/2): equals 1 on supp chi.
double widened(double r);
}  // namespace lp

struct OpFlags {
    bool out_of_range = false;  // dyadic index outside the resolvable range
    bool mean_passed = false;   // zero mode left untouched by a singular symbol
};

enum class ZeroMode { error, pass, drop };

using Mat4 = std::array<std::array<cplx, kDim>, kDim>;
// Symbols receive the full wavevector (Nyquist kept) and the derivative one
// (Nyquist zeroed). Even symbols should use the first, odd ones the second.
using ScalarSymbol = std::function<cplx(const Vec4& xi, const Vec4& xi_d)>;
using MatrixSymbol = std::function<Mat4(const Vec4& xi, const Vec4& xi_d)>;
using SpacetimeSymbol =
    std::function<cplx(double tau, double tau_d, const Vec4& xi, const Vec4& xi_d)>;

SpatialField apply_spatial_multiplier(const SpatialField& f, const ScalarSymbol& m);
VectorField apply_spatial_multiplier(const VectorField& f, const MatrixSymbol& m);
SpacetimeField apply_spacetime_multiplier(const SpacetimeField& f, const SpacetimeSymbol& m);

// Cached real symbol tables for one grid.
class MultiplierBank {
public:
    explicit MultiplierBank(const GridSpec& g);

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& radius() const { return radius_; }  // |xi| per spatial mode
    const std::vector<double>& modulation() const;                  // ||tau|-|xi|| per space-time mode

    std::vector<double> pk_symbol(int k) const;
    std::vector<double> p_less_symbol(int k) const;
    std::vector<double> p_tilde_symbol(int k) const;
    std::vector<double> qj_symbol(int j) const;
    std::vector<double> q_less_symbol(int j) const;

    int k_min() const { return grid_.k_min(); }
    int k_max() const { return grid_.k_max(); }
    int j_min() const;
    int j_max() const;

private:
    GridSpec grid_;
    std::vector<double> radius_;
    mutable std::once_flag mod_once_;
    mutable std::vector<double> modulation_;
    mutable int jmin_ = 0, jmax_ = 0;
};

// Shared bank per grid (constructed on first use, thread-safe).
const MultiplierBank& bank(const GridSpec& g);

// Multiply a spectrum by a table of matching size.
void multiply(SpatialSpectrum& c, const std::vector<double>& table);
void multiply(SpacetimeSpectrum& c, const std::vector<double>& table);
SpatialField apply_table(const SpatialField& f, const std::vector<double>& table);
SpacetimeField apply_table(const SpacetimeField& f, const std::vector<double>& table);
// Space-time field times a spatial table (same symbol at every tau).
SpacetimeField apply_spatial_table(const SpacetimeField& f, const std::vector<double>& table);

// Littlewood-Paley pieces.
SpatialField pk(const SpatialField& f, int k, OpFlags* flags = nullptr);
SpatialField p_less(const SpatialField& f, int k);       // P_{<k}
SpatialField p_geq(const SpatialField& f, int k);        // I - P_{<k}
SpatialField p_tilde(const SpatialField& f, int k);      // widened P_k
SpacetimeField pk(const SpacetimeField& f, int k, OpFlags* flags = nullptr);
SpacetimeField p_less(const SpacetimeField& f, int k);
SpacetimeField p_geq(const SpacetimeField& f, int k);

// Modulation localizers; the grid taper is applied before the time transform.
SpacetimeField qj(const SpacetimeField& F, int j);
SpacetimeField q_less(const SpacetimeField& F, int j);   // Q_{<j}, keeps cone modes
SpacetimeField q_geq(const SpacetimeField& F, int j);    // I - Q_{<j}
SpacetimeField apply_taper(const SpacetimeField& F);

// Differential operators (spectral).
SpatialField partial(const SpatialField& f, int axis);           // d/dx_axis
SpatialField laplacian(const SpatialField& f);
SpatialField abs_d(const SpatialField& f);                       // |D|
SpatialField inv_abs_d(const SpatialField& f, ZeroMode zm = ZeroMode::pass, OpFlags* flags = nullptr);
SpatialField inv_laplacian(const SpatialField& f, ZeroMode zm = ZeroMode::pass, OpFlags* flags = nullptr);
SpatialField divergence(const VectorField& a);
VectorField gradient(const SpatialField& f);
SpacetimeField partial(const SpacetimeField& f, int axis);
SpacetimeField partial_t(const SpacetimeField& f);
SpacetimeField laplacian(const SpacetimeField& f);
SpacetimeField inv_laplacian(const SpacetimeField& f, ZeroMode zm = ZeroMode::pass, OpFlags* flags = nullptr);

// Leray projection I - xi xi^T / |xi|^2 (derivative wavevector; identity where it vanishes).
VectorField leray(const VectorField& a, OpFlags* flags = nullptr);
VectorSpacetimeField leray(const VectorSpacetimeField& a);
Mat4 leray_symbol(const Vec4& xi_d);

// Wave operator box = Laplacian - d_t^2, symbol tau^2 - |xi|^2.
SpacetimeField box(const SpacetimeField& F);
// Default guard width 4 * (2 pi / T).
double default_eta(const GridSpec& g);
// Inverse wave operator; throws ConeResonance on occupied modes with ||tau|-|xi|| < eta.
SpacetimeField inv_box(const SpacetimeField& F, double eta = -1);
// Remove modes with ||tau|-|xi|| < eta and modes with xi = 0.
SpacetimeField cone_guard(const SpacetimeField& F, double eta = -1);
// Largest ||tau|-|xi|| violation among occupied modes, or a negative value if none.
bool violates_guard(const SpacetimeField& F, double eta, double* tau = nullptr, double* xi = nullptr);

// Mode occupancy threshold relative to the largest coefficient.
inline constexpr double kOccupancy = 1e-12;

}  // namespace mkg
