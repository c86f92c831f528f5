#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "bgpr/core_types.hpp"

namespace bgpr {

/// Circular shift (l_1, ..., l_d) on the object grid.
using Shift = std::vector<std::size_t>;

/// M vec(X) = R3 assembled from non-overlapping autocorrelation shifts.
struct LinearSystem {
  Eigen::MatrixXd M;    // rows x |Omega|
  Eigen::VectorXd rhs;  // R3
  std::vector<Shift> shifts;
  Shape grid;          // object grid (m_1 x m_2)
  Shape sample_shape;  // extents of the recovered sample
};

/// Shifts l != 0 with (p + l) mod m outside Omega for every p in Omega. Of
/// each pair {l, (m - l) mod m} only the lexicographically smaller is kept.
std::vector<Shift> enumerate_nonoverlap_shifts(const SupportMask& mask);

/// One equation per retained shift l:
///   sum_{q in Omega} (Y[q + l] + Y[q - l]) X[q] = R[l] - sum_p Y[p] Y[p + l].
/// The mirror shift yields the same equation and is not repeated.
LinearSystem build_linear_system(const RealArray& y, const SupportMask& mask, const RealArray& autocorrelation);

struct LeastSquaresResult {
  RealArray x;
  std::size_t rank = 0;
  /// rank == |Omega|; otherwise x is the minimum-norm solution.
  bool unique = false;
};

/// SVD-based least squares with singular values below 1e-10 sigma_max
/// treated as zero.
LeastSquaresResult least_squares_recover(const LinearSystem& system);

/// Singular values of M above 1e-10 sigma_max.
std::size_t numerical_rank(const Eigen::MatrixXd& m);

struct UniquenessCertificate {
  bool unique = false;
  std::size_t rank = 0;
  std::size_t required_rank = 0;
};

UniquenessCertificate uniqueness_certificate(const RealArray& y, const SupportMask& mask);

enum class DimensionBoundForm {
  /// prod(n_i + k_i) >= 2 prod(n_i) + prod(2 n_i - 1).
  General,
  /// (n_1 + k_1)(n_2 + k_2) >= (2 n_1 - 1)(3 n_2 - 1) + n_2 (d = 2 only).
  TwoDimensional,
};

struct DimensionBound {
  bool satisfied = false;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Symmetric-case sufficient ratio k/n: 2^{(d+1)/d} - 1 for the general
  /// form, sqrt(6) - 1 for the two-dimensional form.
  double threshold_factor = 0.0;
};

/// Throws ConfigError for d outside {1, 2, ...}, mismatched lengths or n_i = 0.
DimensionBound dimension_bound(std::span<const std::size_t> n, std::span<const std::size_t> k,
                               DimensionBoundForm form = DimensionBoundForm::General);

struct StabilityConstants {
  double delta1 = 0.0;  // sigma_max((M^T M)^{-1}) = 1 / sigma_min(M)^2
  double delta2 = 0.0;  // sigma_max(M)
  double bound_factor = 0.0;  // delta1 delta2 / prod(m_i)
};

/// Throws DataError when M is rank deficient.
StabilityConstants stability_constants(const LinearSystem& system);

/// Upper bound on ||X* - X||_F for the least-squares solution of a system
/// built from noisy intensities I~ (entrywise error <= c1) and a biased
/// background Y~ (entrywise error <= c2):
///   delta1 delta2 (c1 + c2 (2 ||Y~||_1 + c2 M) + sqrt(C2 ||I~||_1 + C1) / M)
/// with M = prod(m_i), C2 = 4 |Omega| c2^2 M^2 and C1 = 4 |Omega| c2^2 c1 M^3.
double robustness_bound(const LinearSystem& corrupted, double c1, double c2, const RealArray& intensity_tilde,
                        const RealArray& background_tilde);

/// L[r][c] = z[(r + c) mod m]; L1 holds rows n .. m-1.
struct CirculantPair {
  Eigen::MatrixXd L;
  Eigen::MatrixXd L1;
};

CirculantPair build_circulant(std::span<const double> z, std::size_t n);

/// Fraction of draws y ~ N(0, I_k) for which cond(L([x; y])) < 1e12.
double l_nonsingular_check(std::span<const double> x, std::size_t k, std::size_t draws, std::uint64_t seed);

/// Radially clamps every DFT coefficient of h to magnitude <= 2.
RealArray clamp_to_c2(const RealArray& h);
/// Gaussian draw on `shape`, clamped into C2.
RealArray sample_c2(const Shape& shape, std::uint64_t seed);
/// max_i |DFT(h)_i| <= 2 + 1e-10.
bool in_c2(const RealArray& h);

/// c1(h) = (1 / (k ||h||^2)) sum_{r=n}^{m-1} sum_{j=n}^{m-1} h[(j - r) mod m]^2.
/// NaN for h = 0.
double c1_coefficient(std::span<const double> h, std::size_t n);

struct FripCheck {
  double empirical_mean = 0.0;
  double predicted = 0.0;
  double std_error = 0.0;
  double c1 = 0.0;
  double phi_norm_sq = 0.0;
  /// |empirical_mean - predicted| <= 3 stderr.
  bool within_three_stderr = false;
};

/// Monte Carlo mean of (1/k) ||L1 h||^2 over y ~ N(0, I_k), with z = [x; y],
/// against c1(h) ||h||^2 + ||Phi h||^2. Draw i uses the stream
/// derive_seed(seed, i). Throws DataError if h is not in C2.
FripCheck frip_expectation_check(std::span<const double> x, std::span<const double> h, std::size_t draws,
                                 std::uint64_t seed);

}  // namespace bgpr
