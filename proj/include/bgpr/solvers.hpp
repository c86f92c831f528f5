#pragma once

#include <optional>

#include "bgpr/core_types.hpp"
#include "bgpr/projections.hpp"

namespace bgpr {

/// Measurements, known background and support of one retrieval instance.
struct PhaseProblem {
  IntensityMeasurements measurements;
  RealArray background;  // object grid, zero on the support
  SupportMask mask;

  /// Throws ShapeError/DataError on inconsistent extents or a background that
  /// is nonzero on the support. An oversampled measurement grid is rejected
  /// unless `allow_oversampled` is set.
  void validate(bool allow_oversampled) const;
};

struct IterationState {
  RealArray z;  // object grid
  std::size_t iter = 0;
  double last_step_norm = 0.0;
};

/// z^0 = P_B(Re((1/prod m) DFT(b^{1/2}))), cropped to the object grid.
IterationState init_spectral(const IntensityMeasurements& b, const RealArray& y, const SupportMask& mask);

/// z <- P_B(z - lambda (z - P_A z)).
IterationState pgd_step(const IterationState& state, const MagnitudeTarget& target, const RealArray& y,
                        const SupportMask& mask, double lambda = 1.0);
/// z~ = P_A z; z <- z~ on the support, z - beta z~ + y elsewhere.
IterationState bdr_step(const IterationState& state, const MagnitudeTarget& target, const RealArray& y,
                        const SupportMask& mask, double beta = 1.0);
/// bdr_step with beta = 1 and the ball projection for z~.
IterationState cbdr_step(const IterationState& state, const MagnitudeTarget& target, const RealArray& y,
                         const SupportMask& mask);
/// z~ = P_A z; z <- z~ on the support, z - beta z~ elsewhere.
IterationState hio_step(const IterationState& state, const MagnitudeTarget& target, const SupportMask& mask,
                        double beta);

struct RunOptions {
  /// Ground-truth sample on the support; enables relative errors in the trace
  /// and the stop_relative_error rule.
  const RealArray* truth = nullptr;
  /// Starting iterate on the object grid; defaults to init_spectral.
  std::optional<RealArray> initial;
  /// Ball target override for CBDR (used by the DC-branch driver).
  std::optional<MagnitudeTarget> target;
};

/// Runs the configured method until ||z^p - z^{p-1}||_2 <= eps, the optional
/// relative-error target is met, or max_iter iterations have been taken.
/// The estimate is z^p on the support for PGD and P_A(z^p) on the support for
/// the reflection methods. Throws DivergenceError on non-finite iterates.
SolverRun run(const PhaseProblem& problem, const SolverConfig& config, const RunOptions& options = {});

/// CBDR twice, with the DC coefficient pinned to +sqrt(b_0) and -sqrt(b_0);
/// returns the run with the smaller measurement error (the + branch on ties).
SolverRun cbdr_parallel_real(const PhaseProblem& problem, const SolverConfig& config, const RunOptions& options = {});

/// Fienup hybrid input-output with a support constraint only (zero
/// background). Uses config.beta.
SolverRun hio_run(const IntensityMeasurements& b, const SupportMask& mask, const SolverConfig& config,
                  const RunOptions& options = {});

}  // namespace bgpr
