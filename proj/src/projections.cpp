#include "bgpr/projections.hpp"

#include <cmath>

#include "bgpr/errors.hpp"
#include "bgpr/spectral.hpp"

namespace bgpr {

MagnitudeTarget MagnitudeTarget::from_intensity(const IntensityMeasurements& b, MagnitudeMode mode) {
  MagnitudeTarget t;
  t.root_intensity = RealArray(b.shape());
  for (std::size_t i = 0; i < b.values().size(); ++i) t.root_intensity.values[i] = std::sqrt(b.values().values[i]);
  t.mode = mode;
  return t;
}

MagnitudeTarget MagnitudeTarget::ball_with_dc(const IntensityMeasurements& b, int sign) {
  MagnitudeTarget t = from_intensity(b, MagnitudeMode::Ball);
  t.dc_constraint = DcConstraint{sign >= 0 ? 1 : -1, t.root_intensity.values[0]};
  return t;
}

void MagnitudeTarget::validate() const {
  for (double v : root_intensity.values)
    if (!std::isfinite(v) || v < 0.0) throw DataError("target magnitudes must be finite and nonnegative");
  if (dc_constraint) {
    if (mode != MagnitudeMode::Ball) throw ConfigError("a DC constraint is only meaningful in ball mode");
    if (dc_constraint->sign != 1 && dc_constraint->sign != -1) throw ConfigError("DC sign must be +1 or -1");
    if (dc_constraint->value != root_intensity.values[0])
      throw ConfigError("DC constraint value must equal the target magnitude at DC");
  }
}

MagnitudeProjector::MagnitudeProjector(Shape object_shape, MagnitudeTarget target)
    : object_shape_(object_shape), target_(std::move(target)) {
  target_.validate();
  const Shape& m = target_.root_intensity.shape;
  if (m.rank() != object_shape_.rank() || m.rows() < object_shape_.rows() || m.cols() < object_shape_.cols())
    throw ShapeError("object grid " + object_shape_.to_string() + " does not fit measurement grid " + m.to_string());
  buffer_.resize(m.size());
}

void MagnitudeProjector::apply(std::span<const double> z, std::span<double> out) {
  const Shape& m = target_.root_intensity.shape;
  const bool same = m == object_shape_;
  if (z.size() != object_shape_.size() || out.size() != object_shape_.size())
    throw ShapeError("projector input does not match object grid " + object_shape_.to_string());
  if (same) {
    for (std::size_t i = 0; i < z.size(); ++i) buffer_[i] = z[i];
  } else {
    std::fill(buffer_.begin(), buffer_.end(), std::complex<double>{});
    for (std::size_t i = 0; i < object_shape_.rows(); ++i)
      for (std::size_t j = 0; j < object_shape_.cols(); ++j)
        buffer_[flat_index(m, i, j)] = z[flat_index(object_shape_, i, j)];
  }
  dft_execute(buffer_, buffer_, m, Direction::Forward);
  const auto& root = target_.root_intensity.values;
  if (target_.mode == MagnitudeMode::Equality) {
    for (std::size_t i = 0; i < buffer_.size(); ++i) {
      const double mag = std::abs(buffer_[i]);
      buffer_[i] = mag > 0.0 ? buffer_[i] * (root[i] / mag) : std::complex<double>(root[i], 0.0);
    }
  } else {
    for (std::size_t i = 0; i < buffer_.size(); ++i) {
      const double mag = std::abs(buffer_[i]);
      if (mag > root[i]) buffer_[i] *= root[i] / mag;
    }
    if (target_.dc_constraint) buffer_[0] = target_.dc_constraint->sign * target_.dc_constraint->value;
  }
  dft_execute(buffer_, buffer_, m, Direction::Inverse);
  const double scale = 1.0 / static_cast<double>(m.size());
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = buffer_[i].real() * scale;
  } else {
    for (std::size_t i = 0; i < object_shape_.rows(); ++i)
      for (std::size_t j = 0; j < object_shape_.cols(); ++j)
        out[flat_index(object_shape_, i, j)] = buffer_[flat_index(m, i, j)].real() * scale;
  }
}

RealArray MagnitudeProjector::operator()(const RealArray& z) {
  RealArray out(object_shape_);
  apply(z.values, out.values);
  return out;
}

RealArray project_magnitude(const RealArray& z, const MagnitudeTarget& target) {
  MagnitudeTarget t = target;
  t.mode = MagnitudeMode::Equality;
  t.dc_constraint.reset();
  return MagnitudeProjector(z.shape, std::move(t))(z);
}

RealArray project_magnitude_ball(const RealArray& z, const MagnitudeTarget& target) {
  MagnitudeTarget t = target;
  t.mode = MagnitudeMode::Ball;
  return MagnitudeProjector(z.shape, std::move(t))(z);
}

void project_background_inplace(std::span<double> z, const RealArray& y, const SupportMask& mask) {
  if (z.size() != mask.shape().size() || !(y.shape == mask.shape()))
    throw ShapeError("background projection: array does not match mask grid " + mask.shape().to_string());
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!mask.contains(i)) z[i] = y.values[i];
}

RealArray project_background(const RealArray& z, const RealArray& y, const SupportMask& mask) {
  RealArray out = z;
  project_background_inplace(out.values, y, mask);
  return out;
}

RealArray reflect(const RealArray& z, const Projector& projector) {
  RealArray p = projector(z);
  if (!(p.shape == z.shape)) throw ShapeError("projector changed the array shape");
  for (std::size_t i = 0; i < p.size(); ++i) p.values[i] = 2.0 * p.values[i] - z.values[i];
  return p;
}

}  // namespace bgpr
