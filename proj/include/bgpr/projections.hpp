#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bgpr/core_types.hpp"

namespace bgpr {

enum class MagnitudeMode { Equality, Ball };

/// Pins the DC coefficient to sign * value (real-signal CBDR branches).
struct DcConstraint {
  int sign = 1;
  double value = 0.0;
};

/// Target magnitudes b^{1/2} on the measurement grid.
struct MagnitudeTarget {
  RealArray root_intensity;
  MagnitudeMode mode = MagnitudeMode::Equality;
  std::optional<DcConstraint> dc_constraint;

  static MagnitudeTarget from_intensity(const IntensityMeasurements& b, MagnitudeMode mode = MagnitudeMode::Equality);
  /// Ball target whose DC coefficient is pinned to sign * sqrt(b_0).
  static MagnitudeTarget ball_with_dc(const IntensityMeasurements& b, int sign);

  /// Throws DataError on negative/non-finite entries, ConfigError if a DC
  /// constraint is attached in Equality mode or disagrees with b at DC.
  void validate() const;
};

/// Reusable magnitude projector for a fixed object grid and target; owns its
/// transform buffers, so one instance must not be shared between threads.
/// When the measurement grid is larger than the object grid the input is
/// zero-padded, projected, transformed back and cropped.
class MagnitudeProjector {
 public:
  MagnitudeProjector(Shape object_shape, MagnitudeTarget target);

  /// out = P_A(z). `z` and `out` have the object grid's size and may alias.
  void apply(std::span<const double> z, std::span<double> out);
  RealArray operator()(const RealArray& z);

  const MagnitudeTarget& target() const { return target_; }
  const Shape& object_shape() const { return object_shape_; }

 private:
  Shape object_shape_;
  MagnitudeTarget target_;
  std::vector<std::complex<double>> buffer_;
};

/// Equality-mode projection onto |DFT z| = b^{1/2}. Coefficients with
/// ẑ_i = 0 receive phase 1.
RealArray project_magnitude(const RealArray& z, const MagnitudeTarget& target);
/// Radial projection onto |DFT z| <= b^{1/2}, honoring the DC constraint.
RealArray project_magnitude_ball(const RealArray& z, const MagnitudeTarget& target);

/// Keeps z on the support and writes the background y everywhere else.
RealArray project_background(const RealArray& z, const RealArray& y, const SupportMask& mask);
void project_background_inplace(std::span<double> z, const RealArray& y, const SupportMask& mask);

using Projector = std::function<RealArray(const RealArray&)>;

/// 2 P(z) - z.
RealArray reflect(const RealArray& z, const Projector& projector);

}  // namespace bgpr
