#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bgpr {

/// Extents of a 1-D or 2-D array. Storage is always row-major: the flat
/// index of (i, j) is i * cols + j, and a 1-D array of length n is indexed
/// by i alone. Every module (transforms, masks, M, L, L1) uses this order.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::size_t length);
  Shape(std::size_t rows, std::size_t cols);

  /// Accepts 1 or 2 positive extents; anything else is a ShapeError.
  static Shape from_extents(std::span<const std::size_t> extents);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const { return extents_.at(axis); }
  std::size_t size() const;
  std::span<const std::size_t> extents() const { return {extents_.data(), rank_}; }

  /// Number of rows (1 for a 1-D shape) and columns (the length for 1-D).
  std::size_t rows() const { return rank_ == 2 ? extents_[0] : 1; }
  std::size_t cols() const { return rank_ == 2 ? extents_[1] : extents_[0]; }

  std::string to_string() const;

  bool operator==(const Shape&) const = default;

 private:
  std::array<std::size_t, 2> extents_{0, 0};
  std::size_t rank_ = 0;
};

/// Row-major flat index of (row, col); for 1-D shapes row must be 0.
inline std::size_t flat_index(const Shape& shape, std::size_t row, std::size_t col) {
  return row * shape.cols() + col;
}

/// Dense real array with an attached shape.
struct RealArray {
  Shape shape;
  std::vector<double> values;

  RealArray() = default;
  explicit RealArray(Shape s);
  RealArray(Shape s, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(std::size_t row, std::size_t col) { return values[flat_index(shape, row, col)]; }
  double at(std::size_t row, std::size_t col) const { return values[flat_index(shape, row, col)]; }
};

/// Dense complex array with an attached shape (spectra, transform outputs).
struct ComplexArray {
  Shape shape;
  std::vector<std::complex<double>> values;

  ComplexArray() = default;
  explicit ComplexArray(Shape s);
  ComplexArray(Shape s, std::vector<std::complex<double>> v);

  std::size_t size() const { return values.size(); }
};

/// Sample, background and measurement extents per axis.
struct Dims {
  std::vector<std::size_t> sizes;             // n_i
  std::vector<std::size_t> background_sizes;  // k_i
  std::vector<std::size_t> measurement_sizes; // m_i

  /// m_i = n_i + k_i on every axis.
  static Dims without_oversampling(std::vector<std::size_t> n, std::vector<std::size_t> k);

  /// Throws ShapeError unless 1 <= d <= 2, n_i >= 1 and m_i >= n_i + k_i.
  void validate() const;

  std::size_t rank() const { return sizes.size(); }
  Shape sample_shape() const;
  Shape object_shape() const;       // n_i + k_i
  Shape measurement_shape() const;  // m_i
  bool oversampled() const;
};

/// Marks the support Omega of the unknown sample inside the object grid.
class SupportMask {
 public:
  SupportMask() = default;

  /// Axis-aligned block of extent `sample` whose top-left corner sits at
  /// `offset` inside `grid`. Throws ShapeError if the block leaves the grid.
  static SupportMask block(const Shape& grid, const Shape& sample, std::span<const std::size_t> offset);
  /// Block at the origin (the sample occupies the leading entries).
  static SupportMask corner(const Shape& grid, const Shape& sample);
  /// Block centred in the grid (offset floor(k_i / 2) per axis).
  static SupportMask centered(const Shape& grid, const Shape& sample);
  /// Arbitrary support given as a boolean array over the grid.
  static SupportMask from_flags(const Shape& grid, std::vector<std::uint8_t> inside);

  const Shape& shape() const { return shape_; }
  /// Shape of the extracted sample: the block extents, or (|Omega|) for an
  /// irregular support.
  const Shape& sample_shape() const { return sample_shape_; }
  bool contains(std::size_t flat) const { return inside_[flat] != 0; }
  /// Flat indices of Omega in row-major order.
  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t count() const { return indices_.size(); }
  const std::vector<std::uint8_t>& flags() const { return inside_; }
  /// Block offset when the support is a block; empty otherwise.
  const std::vector<std::size_t>& offset() const { return offset_; }

 private:
  Shape shape_;
  Shape sample_shape_;
  std::vector<std::uint8_t> inside_;
  std::vector<std::size_t> indices_;
  std::vector<std::size_t> offset_;
};

/// Z: the sample X on Omega embedded in the known background Y.
class CombinedObject {
 public:
  const RealArray& values() const { return values_; }
  const RealArray& background() const { return background_; }
  const SupportMask& mask() const { return mask_; }
  const Shape& shape() const { return values_.shape; }

 private:
  friend CombinedObject assemble(std::span<const double>, const RealArray&, const SupportMask&);
  RealArray values_;
  RealArray background_;
  SupportMask mask_;
};

/// Places `sample` (row-major over Omega) into a copy of `background`.
/// Throws ShapeError on extent mismatch and DataError if the background is
/// nonzero anywhere on Omega.
CombinedObject assemble(std::span<const double> sample, const RealArray& background, const SupportMask& mask);
inline CombinedObject assemble(const RealArray& sample, const RealArray& background, const SupportMask& mask) {
  return assemble(std::span<const double>(sample.values), background, mask);
}

/// Omega-restricted entries of `z` in row-major order, shaped as the mask's
/// sample shape.
RealArray extract(const RealArray& z, const SupportMask& mask);
inline RealArray extract(const CombinedObject& z) { return extract(z.values(), z.mask()); }

/// Nonnegative Fourier intensities on the measurement grid.
class IntensityMeasurements {
 public:
  IntensityMeasurements() = default;
  /// Throws DataError on negative/non-finite entries, or if `conj_symmetric`
  /// is claimed but I[idx] != I[(m - idx) mod m] beyond 1e-10 relative.
  IntensityMeasurements(RealArray values, bool conj_symmetric);

  const RealArray& values() const { return values_; }
  const Shape& shape() const { return values_.shape; }
  bool conj_symmetric() const { return conj_symmetric_; }

 private:
  RealArray values_;
  bool conj_symmetric_ = false;
};

/// Flat index of the point reflection (m - idx) mod m on every axis.
std::size_t mirror_index(const Shape& shape, std::size_t flat);

enum class Method { PGD, BDR, BDR1, CBDR, HIO };

std::string_view to_string(Method method);
/// Case-insensitive; throws ConfigError on unknown names.
Method parse_method(std::string_view name);

struct SolverConfig {
  Method method = Method::BDR;
  double eps = 1e-12;          // stop when ||z^p - z^{p-1}||_2 <= eps
  std::size_t max_iter = 300;  // T
  double beta = 0.9;           // BDR1 / HIO relaxation
  double lambda = 1.0;         // PGD learning rate
  std::uint64_t seed = 0;
  /// Record (relative error, measurement error) per iteration. Relative
  /// errors need a ground truth; without one they are recorded as NaN.
  bool record_trace = true;
  /// Optional early stop once the relative error drops below this value
  /// (requires a ground truth).
  std::optional<double> stop_relative_error;
  /// Permit m_i > n_i + k_i. The magnitude projection is then only the
  /// zero-pad / replace / crop approximation.
  bool allow_oversampled = false;

  /// Throws ConfigError unless eps > 0, max_iter >= 1, 0 < beta <= 1 and
  /// lambda > 0.
  void validate() const;
};

struct TracePoint {
  double relative_error;
  double measurement_error;
};

enum class StopReason { StepTolerance, TargetReached, MaxIterations };

struct SolverRun {
  RealArray final_estimate;  // recovered sample on Omega
  RealArray final_iterate;   // z-bar (object grid)
  std::size_t iterations_used = 0;
  std::vector<TracePoint> trace;
  bool converged = false;  // step tolerance reached
  StopReason stop_reason = StopReason::MaxIterations;
  double last_step_norm = 0.0;
};

}  // namespace bgpr
