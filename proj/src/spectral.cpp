#include "bgpr/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "bgpr/errors.hpp"

namespace bgpr {
namespace {

// FFTW plans are created once per (extents, direction, in-place) and executed
// through the new-array interface, which is safe to call concurrently.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const Shape& shape, Direction direction, bool in_place) {
    const Key key{shape.rows(), shape.cols(), shape.rank(), direction == Direction::Forward, in_place};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const int sign = direction == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    const std::size_t n = shape.size();
    auto* a = fftw_alloc_complex(n);
    auto* b = in_place ? a : fftw_alloc_complex(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = shape.rank() == 2 ? fftw_plan_dft_2d(static_cast<int>(shape.rows()),
                                                          static_cast<int>(shape.cols()), a, b, sign, flags)
                                       : fftw_plan_dft_1d(static_cast<int>(shape.cols()), a, b, sign, flags);
    if (b != a) fftw_free(b);
    fftw_free(a);
    if (!plan) throw Error("FFTW failed to create a plan for shape " + shape.to_string());
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, bool, bool>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

ComplexArray padded(const ComplexArray& z, const Shape& m) {
  if (z.shape.rank() != m.rank())
    throw ShapeError("array rank " + std::to_string(z.shape.rank()) + " does not match grid " + m.to_string());
  if (z.shape.rows() > m.rows() || z.shape.cols() > m.cols())
    throw ShapeError("array " + z.shape.to_string() + " exceeds measurement grid " + m.to_string());
  if (z.shape == m) return z;
  ComplexArray out(m);
  for (std::size_t i = 0; i < z.shape.rows(); ++i)
    for (std::size_t j = 0; j < z.shape.cols(); ++j)
      out.values[flat_index(m, i, j)] = z.values[flat_index(z.shape, i, j)];
  return out;
}

}  // namespace

void dft_execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, const Shape& shape,
               Direction direction) {
  if (in.size() != shape.size() || out.size() != shape.size())
    throw ShapeError("transform buffers do not match shape " + shape.to_string());
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(PlanCache::instance().get(shape, direction, src == dst), src, dst);
}

Spectrum dft_forward(const ComplexArray& z, const Shape& m) {
  ComplexArray work = padded(z, m);
  dft_execute(work.values, work.values, m, Direction::Forward);
  return work;
}

Spectrum dft_forward(const RealArray& z, const Shape& m) {
  ComplexArray c(z.shape);
  std::copy(z.values.begin(), z.values.end(), c.values.begin());
  return dft_forward(c, m);
}

ComplexArray dft_inverse(const Spectrum& s) {
  ComplexArray out = s;
  dft_execute(out.values, out.values, s.shape, Direction::Inverse);
  const double scale = 1.0 / static_cast<double>(s.shape.size());
  for (auto& v : out.values) v *= scale;
  return out;
}

IntensityMeasurements intensity(const RealArray& z, const Shape& m) {
  const Spectrum s = dft_forward(z, m);
  RealArray b(m);
  for (std::size_t i = 0; i < s.size(); ++i) b.values[i] = std::norm(s.values[i]);
  // Exact conjugate symmetry is restored by averaging mirror pairs, which
  // only moves entries by rounding error.
  RealArray sym(m);
  for (std::size_t i = 0; i < b.size(); ++i) sym.values[i] = 0.5 * (b.values[i] + b.values[mirror_index(m, i)]);
  return IntensityMeasurements(std::move(sym), true);
}

RealArray autocorrelation_direct(const RealArray& z) {
  const Shape& s = z.shape;
  const std::size_t rows = s.rows(), cols = s.cols();
  RealArray r(s);
  for (std::size_t l1 = 0; l1 < rows; ++l1)
    for (std::size_t l2 = 0; l2 < cols; ++l2) {
      double acc = 0.0;
      for (std::size_t p1 = 0; p1 < rows; ++p1) {
        const double* a = &z.values[p1 * cols];
        const double* b = &z.values[((p1 + l1) % rows) * cols];
        for (std::size_t p2 = 0; p2 < cols; ++p2) acc += a[p2] * b[(p2 + l2) % cols];
      }
      r.values[l1 * cols + l2] = acc;
    }
  return r;
}

RealArray autocorrelation_from_spectrum(const RealArray& spectrum) {
  ComplexArray c(spectrum.shape);
  double peak = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    c.values[i] = spectrum.values[i];
    peak = std::max(peak, std::abs(spectrum.values[i]));
  }
  const ComplexArray inv = dft_inverse(c);
  RealArray r(spectrum.shape);
  for (std::size_t i = 0; i < inv.size(); ++i) {
    if (std::abs(inv.values[i].imag()) > 1e-9 * peak)
      throw DataError("spectrum is not conjugate-symmetric: inverse transform has an imaginary part");
    r.values[i] = inv.values[i].real();
  }
  return r;
}

RealArray autocorrelation_from_intensity(const IntensityMeasurements& intensities) {
  if (!intensities.conj_symmetric())
    throw DataError("autocorrelation requires conjugate-symmetric intensities (real object)");
  return autocorrelation_from_spectrum(intensities.values());
}

}  // namespace bgpr
