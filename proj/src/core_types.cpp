#include "bgpr/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bgpr/errors.hpp"

namespace bgpr {

Shape::Shape(std::size_t length) : extents_{length, 0}, rank_(1) {
  if (length == 0) throw ShapeError("shape extents must be positive");
}

Shape::Shape(std::size_t rows, std::size_t cols) : extents_{rows, cols}, rank_(2) {
  if (rows == 0 || cols == 0) throw ShapeError("shape extents must be positive");
}

Shape Shape::from_extents(std::span<const std::size_t> extents) {
  switch (extents.size()) {
    case 1:
      return Shape(extents[0]);
    case 2:
      return Shape(extents[0], extents[1]);
    default:
      throw ShapeError("only 1-D and 2-D arrays are supported (got d=" + std::to_string(extents.size()) + ")");
  }
}

std::size_t Shape::size() const {
  if (rank_ == 0) return 0;
  return rank_ == 1 ? extents_[0] : extents_[0] * extents_[1];
}

std::string Shape::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t a = 0; a < rank_; ++a) os << (a ? "x" : "") << extents_[a];
  os << ')';
  return os.str();
}

RealArray::RealArray(Shape s) : shape(s), values(s.size(), 0.0) {}

RealArray::RealArray(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {
  if (values.size() != shape.size())
    throw ShapeError("array of " + std::to_string(values.size()) + " values does not match shape " +
                     shape.to_string());
}

ComplexArray::ComplexArray(Shape s) : shape(s), values(s.size()) {}

ComplexArray::ComplexArray(Shape s, std::vector<std::complex<double>> v) : shape(s), values(std::move(v)) {
  if (values.size() != shape.size())
    throw ShapeError("array of " + std::to_string(values.size()) + " values does not match shape " +
                     shape.to_string());
}

Dims Dims::without_oversampling(std::vector<std::size_t> n, std::vector<std::size_t> k) {
  Dims d;
  d.sizes = std::move(n);
  d.background_sizes = std::move(k);
  if (d.sizes.size() == d.background_sizes.size())
    for (std::size_t i = 0; i < d.sizes.size(); ++i) d.measurement_sizes.push_back(d.sizes[i] + d.background_sizes[i]);
  d.validate();
  return d;
}

void Dims::validate() const {
  const std::size_t d = sizes.size();
  if (d < 1 || d > 2) throw ShapeError("only d = 1 or d = 2 is supported (got d=" + std::to_string(d) + ")");
  if (background_sizes.size() != d || measurement_sizes.size() != d)
    throw ShapeError("sizes, background_sizes and measurement_sizes must have the same length");
  for (std::size_t i = 0; i < d; ++i) {
    if (sizes[i] == 0) throw ShapeError("sample extents must be positive");
    if (measurement_sizes[i] < sizes[i] + background_sizes[i])
      throw ShapeError("measurement size m_" + std::to_string(i) + " is smaller than n_i + k_i");
  }
}

Shape Dims::sample_shape() const { return Shape::from_extents(sizes); }

Shape Dims::object_shape() const {
  std::vector<std::size_t> e(sizes.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = sizes[i] + background_sizes[i];
  return Shape::from_extents(e);
}

Shape Dims::measurement_shape() const { return Shape::from_extents(measurement_sizes); }

bool Dims::oversampled() const { return !(object_shape() == measurement_shape()); }

SupportMask SupportMask::block(const Shape& grid, const Shape& sample, std::span<const std::size_t> offset) {
  if (grid.rank() != sample.rank() || offset.size() != grid.rank())
    throw ShapeError("support block rank does not match grid rank");
  for (std::size_t a = 0; a < grid.rank(); ++a)
    if (offset[a] + sample[a] > grid[a])
      throw ShapeError("support block " + sample.to_string() + " at offset " + std::to_string(offset[a]) +
                       " leaves grid " + grid.to_string());
  SupportMask m;
  m.shape_ = grid;
  m.sample_shape_ = sample;
  m.inside_.assign(grid.size(), 0);
  m.offset_.assign(offset.begin(), offset.end());
  const std::size_t r0 = grid.rank() == 2 ? offset[0] : 0;
  const std::size_t c0 = grid.rank() == 2 ? offset[1] : offset[0];
  for (std::size_t i = 0; i < sample.rows(); ++i)
    for (std::size_t j = 0; j < sample.cols(); ++j) {
      const std::size_t f = flat_index(grid, r0 + i, c0 + j);
      m.inside_[f] = 1;
      m.indices_.push_back(f);
    }
  return m;
}

SupportMask SupportMask::corner(const Shape& grid, const Shape& sample) {
  const std::array<std::size_t, 2> zero{0, 0};
  return block(grid, sample, std::span<const std::size_t>(zero.data(), grid.rank()));
}

SupportMask SupportMask::centered(const Shape& grid, const Shape& sample) {
  if (grid.rank() != sample.rank()) throw ShapeError("support block rank does not match grid rank");
  std::array<std::size_t, 2> off{0, 0};
  for (std::size_t a = 0; a < grid.rank(); ++a) {
    if (sample[a] > grid[a]) throw ShapeError("sample larger than grid");
    off[a] = (grid[a] - sample[a]) / 2;
  }
  return block(grid, sample, std::span<const std::size_t>(off.data(), grid.rank()));
}

SupportMask SupportMask::from_flags(const Shape& grid, std::vector<std::uint8_t> inside) {
  if (inside.size() != grid.size()) throw ShapeError("support flags do not match grid " + grid.to_string());
  SupportMask m;
  m.shape_ = grid;
  m.inside_ = std::move(inside);
  for (std::size_t f = 0; f < m.inside_.size(); ++f)
    if (m.inside_[f]) m.indices_.push_back(f);
  if (m.indices_.empty()) throw ShapeError("support must contain at least one point");
  m.sample_shape_ = Shape(m.indices_.size());
  return m;
}

CombinedObject assemble(std::span<const double> sample, const RealArray& background, const SupportMask& mask) {
  if (!(background.shape == mask.shape()))
    throw ShapeError("background " + background.shape.to_string() + " does not match mask grid " +
                     mask.shape().to_string());
  if (sample.size() != mask.count())
    throw ShapeError("sample has " + std::to_string(sample.size()) + " entries but the support has " +
                     std::to_string(mask.count()));
  for (std::size_t f : mask.indices())
    if (background.values[f] != 0.0) throw DataError("background must be zero on the support");
  CombinedObject z;
  z.background_ = background;
  z.mask_ = mask;
  z.values_ = background;
  const auto idx = mask.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) z.values_.values[idx[i]] = sample[i];
  return z;
}

RealArray extract(const RealArray& z, const SupportMask& mask) {
  if (!(z.shape == mask.shape()))
    throw ShapeError("array " + z.shape.to_string() + " does not match mask grid " + mask.shape().to_string());
  RealArray out(mask.sample_shape());
  const auto idx = mask.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) out.values[i] = z.values[idx[i]];
  return out;
}

std::size_t mirror_index(const Shape& shape, std::size_t flat) {
  const std::size_t rows = shape.rows(), cols = shape.cols();
  const std::size_t i = flat / cols, j = flat % cols;
  const std::size_t mi = (rows - i) % rows, mj = (cols - j) % cols;
  return mi * cols + mj;
}

IntensityMeasurements::IntensityMeasurements(RealArray values, bool conj_symmetric)
    : values_(std::move(values)), conj_symmetric_(conj_symmetric) {
  double peak = 0.0;
  for (double v : values_.values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("intensities must be finite and nonnegative");
    peak = std::max(peak, v);
  }
  if (conj_symmetric_) {
    const double tol = 1e-10 * std::max(peak, 1e-300);
    for (std::size_t f = 0; f < values_.size(); ++f)
      if (std::abs(values_.values[f] - values_.values[mirror_index(values_.shape, f)]) > tol)
        throw DataError("intensities flagged conjugate-symmetric are not symmetric");
  }
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::PGD: return "PGD";
    case Method::BDR: return "BDR";
    case Method::BDR1: return "BDR1";
    case Method::CBDR: return "CBDR";
    case Method::HIO: return "HIO";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (Method m : {Method::PGD, Method::BDR, Method::BDR1, Method::CBDR, Method::HIO})
    if (upper == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (stop_relative_error && !(*stop_relative_error > 0.0))
    throw ConfigError("stop_relative_error must be positive");
}

}  // namespace bgpr
