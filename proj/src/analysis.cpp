#include "bgpr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgpr/errors.hpp"
#include "bgpr/random.hpp"
#include "bgpr/spectral.hpp"

namespace bgpr {
namespace {

std::size_t shifted(const Shape& grid, std::size_t flat, std::size_t l1, std::size_t l2, bool negative) {
  const std::size_t rows = grid.rows(), cols = grid.cols();
  const std::size_t i = flat / cols, j = flat % cols;
  const std::size_t si = negative ? (i + rows - l1) % rows : (i + l1) % rows;
  const std::size_t sj = negative ? (j + cols - l2) % cols : (j + l2) % cols;
  return si * cols + sj;
}

// (row, col) offsets of a shift; 1-D shifts live on the single row.
std::pair<std::size_t, std::size_t> split(const Shape& grid, const Shift& l) {
  return grid.rank() == 2 ? std::pair{l[0], l[1]} : std::pair{std::size_t{0}, l[0]};
}

Eigen::MatrixXd system_matrix(const RealArray& y, const SupportMask& mask, const std::vector<Shift>& shifts) {
  const Shape& grid = mask.shape();
  const auto support = mask.indices();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(shifts.size()), static_cast<Eigen::Index>(support.size()));
  for (std::size_t r = 0; r < shifts.size(); ++r) {
    const auto [l1, l2] = split(grid, shifts[r]);
    for (std::size_t q = 0; q < support.size(); ++q)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) =
          y.values[shifted(grid, support[q], l1, l2, false)] + y.values[shifted(grid, support[q], l1, l2, true)];
  }
  return m;
}

Eigen::JacobiSVD<Eigen::MatrixXd> svd_of(const Eigen::MatrixXd& m, bool vectors) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m, vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0);
}

std::size_t rank_from(const Eigen::VectorXd& sigma) {
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  const double tol = 1e-10 * sigma(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol) ++r;
  return r;
}

}  // namespace

std::vector<Shift> enumerate_nonoverlap_shifts(const SupportMask& mask) {
  const Shape& grid = mask.shape();
  const auto support = mask.indices();
  std::vector<Shift> out;
  for (std::size_t f = 1; f < grid.size(); ++f) {
    const std::size_t mirror = mirror_index(grid, f);
    if (mirror < f) continue;
    const std::size_t l1 = f / grid.cols(), l2 = f % grid.cols();
    bool clear = true;
    for (std::size_t p : support)
      if (mask.contains(shifted(grid, p, l1, l2, false))) {
        clear = false;
        break;
      }
    if (!clear) continue;
    out.push_back(grid.rank() == 2 ? Shift{l1, l2} : Shift{l2});
  }
  return out;
}

LinearSystem build_linear_system(const RealArray& y, const SupportMask& mask, const RealArray& autocorrelation) {
  const Shape& grid = mask.shape();
  if (!(y.shape == grid)) throw ShapeError("background does not match the mask grid " + grid.to_string());
  if (!(autocorrelation.shape == grid))
    throw ShapeError("autocorrelation " + autocorrelation.shape.to_string() + " does not match grid " +
                     grid.to_string());
  LinearSystem sys;
  sys.grid = grid;
  sys.sample_shape = mask.sample_shape();
  sys.shifts = enumerate_nonoverlap_shifts(mask);
  sys.M = system_matrix(y, mask, sys.shifts);
  sys.rhs.resize(static_cast<Eigen::Index>(sys.shifts.size()));
  for (std::size_t r = 0; r < sys.shifts.size(); ++r) {
    const auto [l1, l2] = split(grid, sys.shifts[r]);
    double yy = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) yy += y.values[p] * y.values[shifted(grid, p, l1, l2, false)];
    sys.rhs(static_cast<Eigen::Index>(r)) = autocorrelation.values[l1 * grid.cols() + l2] - yy;
  }
  return sys;
}

std::size_t numerical_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  return rank_from(svd_of(m, false).singularValues());
}

LeastSquaresResult least_squares_recover(const LinearSystem& system) {
  const auto cols = system.M.cols();
  LeastSquaresResult out;
  out.x = RealArray(system.sample_shape);
  if (system.M.rows() == 0) return out;
  const auto svd = svd_of(system.M, true);
  const Eigen::VectorXd& sigma = svd.singularValues();
  out.rank = rank_from(sigma);
  out.unique = out.rank == static_cast<std::size_t>(cols);
  Eigen::VectorXd coeff = svd.matrixU().transpose() * system.rhs;
  for (Eigen::Index i = 0; i < coeff.size(); ++i)
    coeff(i) = static_cast<std::size_t>(i) < out.rank ? coeff(i) / sigma(i) : 0.0;
  const Eigen::VectorXd x = svd.matrixV() * coeff;
  for (Eigen::Index i = 0; i < cols; ++i) out.x.values[static_cast<std::size_t>(i)] = x(i);
  return out;
}

UniquenessCertificate uniqueness_certificate(const RealArray& y, const SupportMask& mask) {
  if (!(y.shape == mask.shape())) throw ShapeError("background does not match the mask grid");
  const auto shifts = enumerate_nonoverlap_shifts(mask);
  UniquenessCertificate c;
  c.required_rank = mask.count();
  c.rank = numerical_rank(system_matrix(y, mask, shifts));
  c.unique = c.rank == c.required_rank;
  return c;
}

DimensionBound dimension_bound(std::span<const std::size_t> n, std::span<const std::size_t> k,
                               DimensionBoundForm form) {
  if (n.empty() || n.size() != k.size()) throw ConfigError("dimension_bound: n and k must have the same length >= 1");
  for (std::size_t v : n)
    if (v == 0) throw ConfigError("dimension_bound: sample sizes must be positive");
  const double d = static_cast<double>(n.size());
  DimensionBound b;
  if (form == DimensionBoundForm::General) {
    double lhs = 1.0, prod_n = 1.0, prod_2n = 1.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      lhs *= static_cast<double>(n[i] + k[i]);
      prod_n *= static_cast<double>(n[i]);
      prod_2n *= static_cast<double>(2 * n[i] - 1);
    }
    b.lhs = lhs;
    b.rhs = 2.0 * prod_n + prod_2n;
    b.threshold_factor = std::pow(2.0, (d + 1.0) / d) - 1.0;
  } else {
    if (n.size() != 2) throw ConfigError("the two-dimensional bound needs d = 2");
    const double n1 = static_cast<double>(n[0]), n2 = static_cast<double>(n[1]);
    b.lhs = static_cast<double>(n[0] + k[0]) * static_cast<double>(n[1] + k[1]);
    b.rhs = (2.0 * n1 - 1.0) * (3.0 * n2 - 1.0) + n2;
    b.threshold_factor = std::sqrt(6.0) - 1.0;
  }
  b.satisfied = b.lhs >= b.rhs;
  return b;
}

StabilityConstants stability_constants(const LinearSystem& system) {
  if (system.M.rows() < system.M.cols() || system.M.cols() == 0)
    throw DataError("stability constants need at least as many equations as unknowns");
  const Eigen::VectorXd sigma = svd_of(system.M, false).singularValues();
  if (rank_from(sigma) != static_cast<std::size_t>(system.M.cols()))
    throw DataError("M is rank deficient; stability constants are undefined");
  const double smin = sigma(sigma.size() - 1);
  StabilityConstants c;
  c.delta1 = 1.0 / (smin * smin);
  c.delta2 = sigma(0);
  c.bound_factor = c.delta1 * c.delta2 / static_cast<double>(system.grid.size());
  return c;
}

double robustness_bound(const LinearSystem& corrupted, double c1, double c2, const RealArray& intensity_tilde,
                        const RealArray& background_tilde) {
  if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw ConfigError("noise levels must be nonnegative");
  const StabilityConstants s = stability_constants(corrupted);
  const double m = static_cast<double>(corrupted.grid.size());
  const double omega = static_cast<double>(corrupted.M.cols());
  double i1 = 0.0, y1 = 0.0;
  for (double v : intensity_tilde.values) i1 += std::abs(v);
  for (double v : background_tilde.values) y1 += std::abs(v);
  const double big_c2 = 4.0 * omega * c2 * c2 * m * m;
  const double big_c1 = 4.0 * omega * c2 * c2 * c1 * m * m * m;
  return s.delta1 * s.delta2 * (c1 + c2 * (2.0 * y1 + c2 * m) + std::sqrt(big_c2 * i1 + big_c1) / m);
}

CirculantPair build_circulant(std::span<const double> z, std::size_t n) {
  const std::size_t m = z.size();
  if (n > m) throw ShapeError("build_circulant: n exceeds the signal length");
  CirculantPair p;
  p.L.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c)
      p.L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = z[(r + c) % m];
  p.L1 = p.L.bottomRows(static_cast<Eigen::Index>(m - n));
  return p;
}

double l_nonsingular_check(std::span<const double> x, std::size_t k, std::size_t draws, std::uint64_t seed) {
  if (k < 1) throw ConfigError("l_nonsingular_check needs k >= 1");
  if (draws == 0) throw ConfigError("l_nonsingular_check needs at least one draw");
  std::vector<double> z(x.size() + k);
  std::copy(x.begin(), x.end(), z.begin());
  std::size_t good = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, d));
    for (std::size_t i = 0; i < k; ++i) z[x.size() + i] = rng.normal();
    const Eigen::VectorXd sigma = svd_of(build_circulant(z, x.size()).L, false).singularValues();
    const double smin = sigma(sigma.size() - 1);
    const double cond = smin > 0.0 ? sigma(0) / smin : std::numeric_limits<double>::infinity();
    if (cond < 1e12) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(draws);
}

RealArray clamp_to_c2(const RealArray& h) {
  Spectrum s = dft_forward(h);
  for (auto& v : s.values) {
    const double mag = std::abs(v);
    if (mag > 2.0) v *= 2.0 / mag;
  }
  const ComplexArray back = dft_inverse(s);
  RealArray out(h.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = back.values[i].real();
  return out;
}

RealArray sample_c2(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  RealArray h(shape);
  for (double& v : h.values) v = rng.normal();
  return clamp_to_c2(h);
}

bool in_c2(const RealArray& h) {
  const Spectrum s = dft_forward(h);
  for (const auto& v : s.values)
    if (std::abs(v) > 2.0 + 1e-10) return false;
  return true;
}

namespace {

double c1_double_sum(std::span<const double> h, std::size_t n) {
  const std::size_t m = h.size();
  double acc = 0.0;
  for (std::size_t r = n; r < m; ++r)
    for (std::size_t j = n; j < m; ++j) {
      const double v = h[(j + m - r) % m];
      acc += v * v;
    }
  return acc;
}

}  // namespace

double c1_coefficient(std::span<const double> h, std::size_t n) {
  const std::size_t m = h.size();
  if (n >= m) throw ShapeError("c1_coefficient: need k = m - n >= 1");
  double norm_sq = 0.0;
  for (double v : h) norm_sq += v * v;
  if (norm_sq == 0.0) return std::nan("");
  return c1_double_sum(h, n) / (static_cast<double>(m - n) * norm_sq);
}

FripCheck frip_expectation_check(std::span<const double> x, std::span<const double> h, std::size_t draws,
                                 std::uint64_t seed) {
  const std::size_t n = x.size(), m = h.size();
  if (n >= m) throw ShapeError("frip check: h must be longer than x");
  if (draws < 2) throw ConfigError("frip check needs at least two draws");
  if (!in_c2(RealArray(Shape(m), std::vector<double>(h.begin(), h.end()))))
    throw DataError("frip check: h is not in C2");
  const std::size_t k = m - n;
  const double kd = static_cast<double>(k);

  FripCheck out;
  // Phi h: deterministic part of L1 h from z1 = [x; 0].
  double phi = 0.0;
  for (std::size_t r = n; r < m; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t idx = (r + c) % m;
      if (idx < n) acc += x[idx] * h[c];
    }
    phi += acc * acc;
  }
  out.phi_norm_sq = phi / kd;
  out.c1 = c1_coefficient(h, n);
  out.predicted = c1_double_sum(h, n) / kd + out.phi_norm_sq;

  std::vector<double> z(m);
  std::copy(x.begin(), x.end(), z.begin());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, d));
    for (std::size_t i = n; i < m; ++i) z[i] = rng.normal();
    double value = 0.0;
    for (std::size_t r = n; r < m; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < m; ++c) acc += z[(r + c) % m] * h[c];
      value += acc * acc;
    }
    value /= kd;
    const double delta = value - mean;
    mean += delta / static_cast<double>(d + 1);
    m2 += delta * (value - mean);
  }
  out.empirical_mean = mean;
  out.std_error = std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws));
  out.within_three_stderr = std::abs(out.empirical_mean - out.predicted) <= 3.0 * out.std_error;
  return out;
}

}  // namespace bgpr
