#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bgpr/core_types.hpp"
#include "bgpr/io_formats.hpp"
#include "bgpr/solvers.hpp"

namespace bgpr {

// ---- generators -----------------------------------------------------------

/// Type 1: i.i.d. N(0, 1). Type 2: cos(39.2 pi t - 12 sin 2 pi t) +
/// cos(85.4 pi t + 12 sin 2 pi t) at t = (i + 1) / (n + 1). Type 3: the first
/// n values of the CSV at `path` (all values when n = 0).
std::vector<double> gen_signal(int type, std::size_t n, std::uint64_t seed, const std::string& path = {});

/// i.i.d. N(mu, sigma^2) off the support, exactly zero on it.
RealArray gen_background(const SupportMask& mask, double mu, double sigma, std::uint64_t seed);

struct NoiseSpec {
  double sigma = 0.0;            // Gaussian std on root intensities
  double background_bias = 0.0;  // bound c2 on a uniform background bias
};

/// sqrt(b) <- max(0, sqrt(b) + e), e_i = (g_i + g_mirror(i)) / 2 with
/// g ~ N(0, sigma^2), then squared again.
IntensityMeasurements add_noise(const IntensityMeasurements& b, const NoiseSpec& spec, std::uint64_t seed);

/// Support block of extents n inside the grid n + k ("corner" or "center").
SupportMask make_mask(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                      const std::string& placement);

// ---- seeding ----------------------------------------------------------------

/// Cell key of a sweep cell: (n_1 << 32) ^ k_1 (first axis).
std::uint64_t cell_key(std::size_t n, std::size_t k);
/// Seed of one trial: derive_seed(master, cell, trial).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell, std::size_t trial);

/// Sub-stream ids under a trial seed.
inline constexpr std::uint64_t kSignalStream = 1;
inline constexpr std::uint64_t kBackgroundStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;

// ---- workers ---------------------------------------------------------------

/// Explicit value if given, else $BGRET_WORKERS, else the hardware thread
/// count (at least 1). Throws ConfigError on a malformed environment value.
std::size_t resolve_workers(std::optional<std::size_t> requested);

/// Calls fn(i) for i in [0, count) on `workers` threads. The first exception
/// thrown by any task is rethrown after all threads have joined.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

// ---- trials ------------------------------------------------------------------

struct TrialOutcome {
  TrialRow row;
  bool converged = false;
  /// max |(|DFT(P_B z)|^2 - b)| / max(b) at the final iterate.
  double fixed_point_residual = 0.0;
  bool diverged = false;
  std::string error;
};

/// Sample extents and ratio selecting one sweep cell.
struct Cell {
  std::vector<std::size_t> n;
  std::vector<std::size_t> k;
};

/// k_i = lround(ratio * n_i).
Cell make_cell(const std::vector<std::size_t>& n, double k_ratio);

/// One trial of `method` on the instance determined by (config, cell, trial).
/// When `image` is given it is the sample; otherwise the signal generator is
/// used. Solver divergence yields a failed row instead of an exception.
TrialOutcome run_trial(const ExperimentConfig& config, Method method, const Cell& cell, std::size_t trial,
                       const RealArray* image = nullptr);

// ---- aggregates ----------------------------------------------------------------

/// Linear-interpolation quantile (q in [0, 1]) of the finite values.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct SweepCell {
  Method method;
  std::vector<std::size_t> n;
  double k_ratio;
  std::vector<std::size_t> k;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double rate = 0.0;
  double rate_stderr = 0.0;
  double mean_wall_ms = 0.0;
};

struct SweepGrid {
  std::vector<SweepCell> cells;
  std::vector<TrialOutcome> outcomes;  // every trial, in cell order
  /// Per (method, n): smallest ratio with rate >= 0.90 / 0.99.
  struct Threshold {
    Method method;
    std::vector<std::size_t> n;
    std::optional<double> ratio90;
    std::optional<double> ratio99;
  };
  std::vector<Threshold> thresholds;

  std::vector<TrialRow> rows() const;
};

/// Every (method, n, k_ratio) cell of the config, `config.trials` trials each.
SweepGrid sweep_phase_transition(const ExperimentConfig& config, std::size_t workers);

/// Per-cell summary CSV for plotting.
std::string sweep_summary_csv(const SweepGrid& grid);

struct ImageMethodSummary {
  Method method;
  double psnr_median = 0, psnr_q25 = 0, psnr_q75 = 0;
  double ssim_median = 0, ssim_q25 = 0, ssim_q75 = 0;
  double relerr_median = 0;
  double wall_median_ms = 0;
  std::size_t successes = 0;
};

struct ImageBenchmark {
  std::vector<ImageMethodSummary> summaries;  // one per method, config order
  std::vector<TrialOutcome> outcomes;         // method-major, trial-minor
  std::vector<TrialRow> rows() const;
};

/// Runs every configured method over `config.trials` backgrounds around
/// `image` (k_i = lround(k_ratio * n_i); the first ratio is used). Trial t
/// uses the same background and noise for every method.
ImageBenchmark image_benchmark(const ExperimentConfig& config, const RealArray& image, std::size_t workers);
std::string image_summary_csv(const ImageBenchmark& bench);

struct LocationResult {
  std::vector<std::size_t> offset;
  double mean_psnr = 0, mean_ssim = 0, mean_relative_error = 0;
  std::vector<TrialOutcome> outcomes;
};

/// Repeats the first configured method for each support offset. Throws
/// ConfigError for offsets that leave the grid.
std::vector<LocationResult> location_bias_study(const ExperimentConfig& config, const RealArray& image,
                                                const std::vector<std::vector<std::size_t>>& offsets,
                                                std::size_t workers);
std::string location_summary_csv(const std::vector<LocationResult>& results);

/// Evenly spaced offsets from the corner to the centre along the diagonal
/// (count >= 1).
std::vector<std::vector<std::size_t>> diagonal_offsets(const Cell& cell, std::size_t count);

/// Deterministic synthetic 2-D test image in [0, 1] (smooth blobs, a disc,
/// a bar and fine texture).
RealArray synthetic_image(std::size_t rows, std::size_t cols);

// ---- verification ----------------------------------------------------------

struct UniquenessReport {
  std::size_t draws = 0;
  std::size_t full_rank = 0;
  std::size_t recovered = 0;  // relative error < 1e-8 and full rank
  double max_relative_error = 0.0;
  double pass_rate = 0.0;
};
/// d = n.size(); Gaussian X and Y per draw, corner support.
UniquenessReport verify_uniqueness(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                                   std::size_t draws, std::uint64_t seed);

struct StabilityReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max over pairs of lhs / rhs
};
StabilityReport verify_stability(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                                 std::size_t pairs, std::uint64_t seed);

struct RobustnessReport {
  std::size_t instances = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max over instances of error / bound
  double c2_zero_max_deviation = 0.0;  // |bound(c2=0) - c1 d1 d2| / (c1 d1 d2)
};
/// Uniform noise: e1 in [-c1, c1] on the intensities (mirror-averaged) and
/// e2 in [-c2, c2] on the background entries.
RobustnessReport verify_robustness(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k, double c1,
                                   double c2, std::size_t instances, std::uint64_t seed);

struct LMatrixReport {
  std::size_t draws = 0;
  double nonsingular_fraction = 0.0;
};
LMatrixReport verify_lmatrix(std::size_t n, std::size_t k, std::size_t draws, std::uint64_t seed);

struct FripEntry {
  double empirical_mean = 0, predicted = 0, std_error = 0, c1 = 0;
  bool within = false;
  bool c1_above_floor = false;
};
struct FripReport {
  std::vector<FripEntry> entries;
  double c1_floor = 0.0;  // (k - n) / k
  bool pass = false;
};
FripReport verify_frip(std::size_t n, std::size_t k, std::size_t num_h, std::size_t draws, std::uint64_t seed);

struct LocalConvergenceReport {
  std::size_t instances = 0;
  std::size_t negative_slope = 0;
  std::vector<double> slopes;  // fitted log-error slope per instance (NaN if unfittable)
};
/// BDR from the truth plus a random perturbation of 2-norm `perturbation` on
/// the support (1-D, corner support). Fits ln(relative error) against the
/// iteration index over the iterations before the error reaches 1e-13.
LocalConvergenceReport verify_local_convergence(std::size_t n, std::size_t k, std::size_t instances,
                                                double perturbation, std::size_t max_iter, std::uint64_t seed);

}  // namespace bgpr
