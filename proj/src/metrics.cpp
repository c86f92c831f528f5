#include "bgpr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bgpr/errors.hpp"
#include "bgpr/spectral.hpp"

namespace bgpr {

double relative_error(std::span<const double> x_hat, std::span<const double> x) {
  if (x_hat.size() != x.size()) throw ShapeError("relative_error: arrays differ in size");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x_hat[i] - x[i];
    num += d * d;
    den += x[i] * x[i];
  }
  if (den == 0.0) throw DataError("relative_error: ground truth is zero");
  return std::sqrt(num / den);
}

double measurement_error(const RealArray& x_hat, const RealArray& y, const SupportMask& mask,
                         const IntensityMeasurements& b) {
  const CombinedObject z = assemble(x_hat, y, mask);
  const Spectrum s = dft_forward(z.values(), b.shape());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double bi = b.values().values[i];
    const double d = std::norm(s.values[i]) - bi;
    num += d * d;
    den += bi * bi;
  }
  if (den == 0.0) throw DataError("measurement_error: measurements are zero");
  return std::sqrt(num / den);
}

double psnr(const RealArray& estimate, const RealArray& reference, double peak) {
  if (!(estimate.shape == reference.shape)) throw ShapeError("psnr: image shapes differ");
  double sse = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate.values[i] - reference.values[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(estimate.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

struct WindowStats {
  double mu_a, mu_b, var_a, var_b, cov;
};

double ssim_index(const WindowStats& w, double c1, double c2) {
  return ((2.0 * w.mu_a * w.mu_b + c1) * (2.0 * w.cov + c2)) /
         ((w.mu_a * w.mu_a + w.mu_b * w.mu_b + c1) * (w.var_a + w.var_b + c2));
}

}  // namespace

SsimResult ssim(const RealArray& a, const RealArray& b, const SsimParams& params) {
  if (!(a.shape == b.shape)) throw ShapeError("ssim: image shapes differ");
  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  const std::size_t rows = a.shape.rows(), cols = a.shape.cols(), w = params.window;

  if (rows < w || cols < w) {
    const double n = static_cast<double>(a.size());
    WindowStats s{0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) {
      s.mu_a += a.values[i];
      s.mu_b += b.values[i];
    }
    s.mu_a /= n;
    s.mu_b /= n;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double da = a.values[i] - s.mu_a, db = b.values[i] - s.mu_b;
      s.var_a += da * da;
      s.var_b += db * db;
      s.cov += da * db;
    }
    s.var_a /= n;
    s.var_b /= n;
    s.cov /= n;
    return {std::min(1.0, ssim_index(s, c1, c2)), true};
  }

  std::vector<double> g(w);
  const double centre = 0.5 * static_cast<double>(w - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double d = static_cast<double>(i) - centre;
    g[i] = std::exp(-d * d / (2.0 * params.sigma * params.sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + w <= rows; ++r0)
    for (std::size_t c0 = 0; c0 + w <= cols; ++c0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double wt = g[i] * g[j];
          const double va = a.at(r0 + i, c0 + j), vb = b.at(r0 + i, c0 + j);
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      const WindowStats s{ma, mb, saa - ma * ma, sbb - mb * mb, sab - ma * mb};
      sum += ssim_index(s, c1, c2);
      ++count;
    }
  return {std::min(1.0, sum / static_cast<double>(count)), false};
}

bool success(double relative_error) { return relative_error < 1e-5; }

}  // namespace bgpr
