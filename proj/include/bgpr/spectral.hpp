#pragma once

#include <complex>
#include <span>

#include "bgpr/core_types.hpp"

namespace bgpr {

using Spectrum = ComplexArray;

enum class Direction { Forward, Inverse };

/// Unnormalized separable DFT of `in` (row-major, extents `shape`) into
/// `out`. Forward uses e^{-2 pi j i t / m}; Inverse uses the conjugate kernel
/// without the 1/prod(m) factor. `in` and `out` may alias.
void dft_execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, const Shape& shape,
               Direction direction);

/// Forward DFT on a measurement grid of extents `m`. Arrays smaller than `m`
/// are zero-padded at the end of each axis; larger arrays are a ShapeError.
Spectrum dft_forward(const RealArray& z, const Shape& m);
Spectrum dft_forward(const ComplexArray& z, const Shape& m);
inline Spectrum dft_forward(const RealArray& z) { return dft_forward(z, z.shape); }
inline Spectrum dft_forward(const ComplexArray& z) { return dft_forward(z, z.shape); }

/// Inverse DFT including the 1/prod(m) normalization.
ComplexArray dft_inverse(const Spectrum& s);

/// |DFT(z)|^2 on the grid `m` (defaults to the object grid).
IntensityMeasurements intensity(const RealArray& z, const Shape& m);
inline IntensityMeasurements intensity(const RealArray& z) { return intensity(z, z.shape); }
inline IntensityMeasurements intensity(const CombinedObject& z) { return intensity(z.values()); }

/// R[l] = sum_p Z[p] Z[(p + l) mod m], evaluated by direct summation.
RealArray autocorrelation_direct(const RealArray& z);
inline RealArray autocorrelation_direct(const CombinedObject& z) { return autocorrelation_direct(z.values()); }

/// R = Re(IDFT(I)). Throws DataError if I is not flagged conjugate-symmetric
/// or the imaginary residue exceeds 1e-9 * max(I).
RealArray autocorrelation_from_intensity(const IntensityMeasurements& intensities);
/// Same as above for a real spectrum that need not be nonnegative (noisy
/// intensities). Only the realness of the result is checked.
RealArray autocorrelation_from_spectrum(const RealArray& spectrum);

}  // namespace bgpr
