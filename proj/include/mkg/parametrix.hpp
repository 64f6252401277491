#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mkg/field.hpp"
#include "mkg/sectors.hpp"

namespace mkg {

// One lattice mode of a real free Coulomb wave: A(0) and dtA(0) coefficients.
struct FreeMode {
    std::array<int, kDim> n{};
    Vec4 eta{};    // full wavevector
    Vec4 eta_d{};  // derivative wavevector (Nyquist zeroed)
    std::array<cplx, kDim> a{}, b{};
};

struct PsiConfig {
    double delta = 0.25;      // small-angle cutoff exponent
    int k_cut = 0;            // A-frequencies with k < k_cut enter psi
    bool small_angle = true;  // apply Pi^w_{>delta k}
    void validate() const;
};

// psi_s(t, x; w) = -s sum_{k < k_cut} L^w_s Delta_{w perp}^{-1} (Pi^w_{>delta k} A_k . w)
// with L^w_s = d_t + s w.grad. It removes A.grad from box + 2i A.grad on the
// half-cone tau = s|xi|. Evaluated lazily from the free modes of A.
class PhaseSymbol {
public:
    static PhaseSymbol build(const VectorField& A, const VectorField& dtA, int sign, const PsiConfig& cfg = {});
    // From a sampled trace; throws InvalidArgument unless it is a free wave.
    static PhaseSymbol build(const VectorSpacetimeField& A, const VectorSpacetimeField& dtA, int sign,
                             const PsiConfig& cfg = {}, double tol = 1e-8);
    static PhaseSymbol from_modes(const GridSpec& g, std::vector<FreeMode> modes, int sign, const PsiConfig& cfg = {});

    const GridSpec& grid() const { return grid_; }
    int sign() const { return sign_; }
    const PsiConfig& config() const { return cfg_; }
    const std::vector<FreeMode>& modes() const { return modes_; }
    bool trivial() const { return modes_.empty() || scale_ == 0; }
    // Factor multiplying psi (1 as built, -1 after negated()).
    double scale() const { return scale_; }
    PhaseSymbol negated() const;

    // Combined multiplier sum_{k<k_cut} chi(|eta|/2^k) Pi^w_{>delta k}(eta).
    double weight(const FreeMode& m, const Vec4& w) const;
    // Spectral coefficient of psi(t, .; w) at the mode.
    cplx coefficient(const FreeMode& m, const Vec4& w, double t) const;
    double psi_at(double t, const Vec4& x, const Vec4& w) const;
    SpatialField psi(double t, const Vec4& w) const;
    // Largest lattice index |n_i| among the modes.
    int band() const;

private:
    GridSpec grid_;
    std::vector<FreeMode> modes_;
    int sign_ = 1;
    PsiConfig cfg_;
    double scale_ = 1;
};

// Angle between eta and the line through w, in [0, pi/2].
double line_angle(const Vec4& eta, const Vec4& w);
// Pi^w_{>delta k} symbol: 0 within angle 2^{delta k} of the line, 1 beyond twice that.
double small_angle_cut(double angle, int k, double delta);

enum class Side { left, right };

struct QuantizationConfig {
    int aperture = 0;            // sector level l
    double symbol_cutoff = 0.5;  // "<0" truncation: smooth spatial low-pass below this |xi|
    Side side = Side::left;
    void validate() const;
};

// S[e^{i psi(t, .; w)}] for every sector direction on a shared list of modes.
struct SymbolSlice {
    double t = 0;
    int aperture = 0;
    std::vector<std::array<int, kDim>> offset;
    std::vector<std::vector<cplx>> coef;  // per sector, aligned with offset
};
SymbolSlice phase_symbols(const PhaseSymbol& psi, double t, const QuantizationConfig& cfg);

// left:  sum_w S[e^{-i psi_w}] . (P_w u)
// right: sum_w P_w (S[e^{+i psi_w}] . u)
// with P_w the multiplier c_w^2, so the sectors resum to the identity.
SpatialSpectrum quantize(const SymbolSlice& s, const SpatialSpectrum& u, Side side);
SpatialField quantize(const PhaseSymbol& psi, const SpatialField& u, double t, const QuantizationConfig& cfg);
SpacetimeField quantize(const PhaseSymbol& psi, const SpacetimeField& u, const QuantizationConfig& cfg);

// Frequency-1 multiplier chi(|xi|).
SpatialField p0(const SpatialField& u);
// Random P_0-localized complex field.
SpatialField frequency_one_field(const GridSpec& g, std::uint64_t seed);
// Relative spectral mass outside the support of chi(|xi|).
double localization_defect(const SpatialField& u);

// Random free Coulomb connection at dyadic band [kmin, kmax] with energy norm eps
// per (2 pi)^4 cell (the torus norm at the standard period).
std::pair<VectorField, VectorField> free_connection(const GridSpec& g, double eps, std::uint64_t seed, int kmin,
                                                    int kmax);
VectorSpacetimeField free_trace(const VectorField& A, const VectorField& dtA, const GridSpec& trace);

enum class TimeDerivative { spectral, finite_difference };

// box phi + 2i sum_k P_{<k-C} A_j d_j P_k phi, with lower-index A_j, i.e.
// box - 2i sum_k P_{<k-C} A^j d_j P_k.
SpacetimeField box_Ap(const SpacetimeField& phi, const VectorSpacetimeField& A, int C,
                      TimeDerivative td = TimeDerivative::spectral);
// Same with the full magnetic term 2i A_j d_j phi.
SpacetimeField box_A_full(const SpacetimeField& phi, const VectorSpacetimeField& A,
                          TimeDerivative td = TimeDerivative::spectral);

struct PhiAppInput {
    SpatialField g, h;  // data at frequency 1
    SpacetimeField f;   // source at frequency 1 on the trace grid
};

// 1/2 sum_s L_s(t) |D|^{-1} e^{ist|D|} R_s(0) (|D| g - s i h)
//   + sum_s (i s / 2) L_s(t) |D|^{-1} K^s R_s f
// with L_s, R_s the left and right quantizations of e^{-+i psi_s}.
SpacetimeField build_phi_app(const PhiAppInput& in, const PhaseSymbol& plus, const PhaseSymbol& minus,
                             const QuantizationConfig& cfg);
// phi_app and its time derivative at t = 0 (homogeneous part by centered differences).
std::pair<SpatialField, SpatialField> phi_app_initial(const PhiAppInput& in, const PhaseSymbol& plus,
                                                      const PhaseSymbol& minus, const QuantizationConfig& cfg);

struct ParametrixError {
    double mismatch = 0;  // ||phi_app[0] - (g, h)||_{L^2} / denominator
    double residual = 0;  // ||box^p_A phi_app - f||_{L^1 L^2} / denominator
    double denominator = 0;
};
ParametrixError parametrix_error(const PhiAppInput& in, const PhaseSymbol& plus, const PhaseSymbol& minus,
                                 const VectorSpacetimeField& A, int C, const QuantizationConfig& cfg);

struct PowerResult {
    double value = 0;
    int iterations = 0;
    double change = 0;  // relative change of the last iteration
};
// ||L P_0|| at time t (L* = R, so power iteration on P_0 R L P_0).
PowerResult l2_probe(const PhaseSymbol& psi, double t, const QuantizationConfig& cfg, std::uint64_t seed,
                     int iterations = 30);
// ||P_0 (L R - I) P_0|| at time t; L R is self-adjoint.
PowerResult ortho_probe(const PhaseSymbol& psi, double t, const QuantizationConfig& cfg, std::uint64_t seed,
                        int iterations = 30);

struct PowerFit {
    double power = 0;  // slope of log value against log eps
    double r_squared = 0;
    bool monotone = false;
};
PowerFit fit_power(const std::vector<double>& eps, const std::vector<double>& values);

struct KernelSample {
    double dt = 0;  // t - s
    double r = 0;   // |x - y|
    double value = 0;
};
struct KernelConfig {
    int cells = 35;  // period 2 pi * cells; keep it above (2 max t + 16) / 2 pi
    int sign = 1;
    double eps = 0;  // energy norm of A per (2 pi)^4 cell
    int a_modes = 3;  // random A modes (plus conjugates)
    std::uint64_t seed = 1;
    PsiConfig psi;
    std::vector<double> cone_times;  // on-cone samples |x - y| = |t - s|
    double offcone_time = 10;
    std::vector<double> offcone_gaps;  // |x - y| - |t - s|, outside the cone
};
struct KernelReport {
    std::vector<KernelSample> cone, offcone;
    double cone_exponent = 0;     // fit of log|K| against log <t - s>
    double cone_r_squared = 0;
    double offcone_exponent = 0;  // fit of log|K| against log <gap>
    std::size_t modes = 0;
};
KernelConfig default_kernel_config();
// Unit-scale smooth bump on [1/2, 2].
double kernel_bump(double r);
// K(t,x;s,y) = vol^{-1} sum_xi a(|xi|) e^{-i psi(t,x;xi/|xi|)} e^{i(xi.(x-y) + sign (t-s)|xi|)} e^{i psi(s,y;xi/|xi|)}
KernelReport kernel_probe(const KernelConfig& cfg);

}  // namespace mkg
