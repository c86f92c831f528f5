#pragma once

#include <span>

#include "bgpr/core_types.hpp"

namespace bgpr {

/// ||x_hat - x||_2 / ||x||_2. Throws DataError for a zero ground truth.
double relative_error(std::span<const double> x_hat, std::span<const double> x);
inline double relative_error(const RealArray& x_hat, const RealArray& x) {
  return relative_error(std::span<const double>(x_hat.values), std::span<const double>(x.values));
}

/// || |DFT z|^2 - b ||_2 / ||b||_2 with z = assemble(x_hat, y, mask).
double measurement_error(const RealArray& x_hat, const RealArray& y, const SupportMask& mask,
                         const IntensityMeasurements& b);

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const RealArray& estimate, const RealArray& reference, double peak = 1.0);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

struct SsimResult {
  double value = 0.0;
  /// Set when the image is smaller than the window and a single global
  /// window was used instead.
  bool global_fallback = false;
};

/// Mean local SSIM over all window positions fully inside the image
/// (Gaussian-weighted statistics, no padding).
SsimResult ssim(const RealArray& a, const RealArray& b, const SsimParams& params = {});

/// e < 1e-5.
bool success(double relative_error);

struct MetricReport {
  double relative_error = 0.0;
  double measurement_error = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  bool success = false;
};

}  // namespace bgpr
