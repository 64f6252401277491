#pragma once

#include "mkg/field.hpp"

namespace mkg {

// Forward transforms return mode amplitudes (normalized by the point count);
// inverse transforms synthesize samples. Plans are created once per shape and
// reused; execution is safe from several threads.
SpatialSpectrum fft(const SpatialField& f);
SpatialField ifft(const SpatialSpectrum& c, Parity parity = Parity::complex);
SpacetimeSpectrum fft(const SpacetimeField& f);
SpacetimeField ifft(const SpacetimeSpectrum& c, Parity parity = Parity::complex);

// Largest |c(xi) - conj(c(-xi))| relative to max |c|; zero for real fields.
double hermitian_defect(const SpatialSpectrum& c);

}  // namespace mkg
