#include "bgpr/solvers.hpp"

#include <cmath>

#include "bgpr/errors.hpp"
#include "bgpr/metrics.hpp"
#include "bgpr/spectral.hpp"

namespace bgpr {
namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Coordinate update shared by all methods, given z and t = P_A(z).
void update(Method method, std::span<const double> z, std::span<const double> t, std::span<double> out,
            const RealArray* y, const SupportMask& mask, double beta, double lambda) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const bool inside = mask.contains(i);
    switch (method) {
      case Method::PGD:
        out[i] = inside ? z[i] - lambda * (z[i] - t[i]) : y->values[i];
        break;
      case Method::BDR:
      case Method::CBDR:
        out[i] = inside ? t[i] : z[i] - t[i] + y->values[i];
        break;
      case Method::BDR1:
        out[i] = inside ? t[i] : z[i] - beta * t[i] + y->values[i];
        break;
      case Method::HIO:
        out[i] = inside ? t[i] : z[i] - beta * t[i];
        break;
    }
  }
}

IterationState step_with(Method method, const IterationState& state, const MagnitudeTarget& target,
                         const RealArray* y, const SupportMask& mask, double beta, double lambda) {
  if (!(state.z.shape == mask.shape())) throw ShapeError("iterate does not match the mask grid");
  if (y && !(y->shape == mask.shape())) throw ShapeError("background does not match the mask grid");
  MagnitudeProjector project(state.z.shape, target);
  RealArray t(state.z.shape);
  project.apply(state.z.values, t.values);
  IterationState next{RealArray(state.z.shape), state.iter + 1, 0.0};
  update(method, state.z.values, t.values, next.z.values, y, mask, beta, lambda);
  next.last_step_norm = distance(next.z.values, state.z.values);
  return next;
}

MagnitudeTarget target_for(Method method, const IntensityMeasurements& b) {
  return MagnitudeTarget::from_intensity(b, method == Method::CBDR ? MagnitudeMode::Ball : MagnitudeMode::Equality);
}

RealArray zero_background(const SupportMask& mask) { return RealArray(mask.shape()); }

SolverRun iterate(Method method, const IntensityMeasurements& b, const RealArray& y, const SupportMask& mask,
                  const SolverConfig& config, const RunOptions& options) {
  config.validate();
  const Shape grid = mask.shape();
  MagnitudeTarget target = options.target ? *options.target : target_for(method, b);
  if (method != Method::CBDR && target.mode == MagnitudeMode::Ball)
    throw ConfigError("ball targets are only used by CBDR");
  MagnitudeProjector project(grid, target);

  if (options.truth && options.truth->size() != mask.count())
    throw ShapeError("ground truth does not match the support size");
  if (config.stop_relative_error && !options.truth)
    throw ConfigError("stop_relative_error needs a ground truth");

  RealArray z = options.initial ? *options.initial : init_spectral(b, y, mask).z;
  if (!(z.shape == grid)) throw ShapeError("initial iterate does not match the object grid");
  RealArray t(grid), next(grid);
  RealArray estimate(mask.sample_shape());
  const auto support = mask.indices();

  SolverRun result;
  result.trace.reserve(config.record_trace ? config.max_iter : 0);
  for (std::size_t p = 1; p <= config.max_iter; ++p) {
    project.apply(z.values, t.values);
    update(method, z.values, t.values, next.values, &y, mask, config.beta, config.lambda);
    const double step = distance(next.values, z.values);
    if (!std::isfinite(step))
      throw DivergenceError(std::string(to_string(method)) + " iterate became non-finite at iteration " +
                            std::to_string(p));
    std::swap(z, next);
    result.iterations_used = p;
    result.last_step_norm = step;

    for (std::size_t i = 0; i < support.size(); ++i) estimate.values[i] = z.values[support[i]];
    double rel = std::nan("");
    if (options.truth) rel = relative_error(estimate.values, options.truth->values);
    if (config.record_trace) result.trace.push_back({rel, measurement_error(estimate, y, mask, b)});

    if (step <= config.eps) {
      result.converged = true;
      result.stop_reason = StopReason::StepTolerance;
      break;
    }
    if (config.stop_relative_error && rel < *config.stop_relative_error) {
      result.stop_reason = StopReason::TargetReached;
      break;
    }
  }

  result.final_iterate = z;
  if (method == Method::PGD) {
    result.final_estimate = estimate;
  } else {
    project.apply(z.values, t.values);
    result.final_estimate = extract(t, mask);
  }
  return result;
}

}  // namespace

void PhaseProblem::validate(bool allow_oversampled) const {
  const Shape& grid = mask.shape();
  const Shape& m = measurements.shape();
  if (!(background.shape == grid)) throw ShapeError("background does not match the object grid " + grid.to_string());
  if (m.rank() != grid.rank() || m.rows() < grid.rows() || m.cols() < grid.cols())
    throw ShapeError("measurement grid " + m.to_string() + " is smaller than the object grid " + grid.to_string());
  if (!(m == grid) && !allow_oversampled)
    throw ConfigError("oversampled measurements need allow_oversampled (theory mode)");
  for (std::size_t f : mask.indices())
    if (background.values[f] != 0.0) throw DataError("background must be zero on the support");
}

IterationState init_spectral(const IntensityMeasurements& b, const RealArray& y, const SupportMask& mask) {
  const Shape& m = b.shape();
  const Shape& grid = mask.shape();
  ComplexArray root(m);
  for (std::size_t i = 0; i < root.size(); ++i) root.values[i] = std::sqrt(b.values().values[i]);
  const Spectrum s = dft_forward(root);
  const double scale = 1.0 / static_cast<double>(m.size());
  IterationState state{RealArray(grid), 0, 0.0};
  for (std::size_t i = 0; i < grid.rows(); ++i)
    for (std::size_t j = 0; j < grid.cols(); ++j)
      state.z.values[flat_index(grid, i, j)] = s.values[flat_index(m, i, j)].real() * scale;
  project_background_inplace(state.z.values, y, mask);
  return state;
}

IterationState pgd_step(const IterationState& state, const MagnitudeTarget& target, const RealArray& y,
                        const SupportMask& mask, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  MagnitudeTarget t = target;
  t.mode = MagnitudeMode::Equality;
  t.dc_constraint.reset();
  return step_with(Method::PGD, state, t, &y, mask, 1.0, lambda);
}

IterationState bdr_step(const IterationState& state, const MagnitudeTarget& target, const RealArray& y,
                        const SupportMask& mask, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  MagnitudeTarget t = target;
  t.mode = MagnitudeMode::Equality;
  t.dc_constraint.reset();
  return step_with(Method::BDR1, state, t, &y, mask, beta, 1.0);
}

IterationState cbdr_step(const IterationState& state, const MagnitudeTarget& target, const RealArray& y,
                         const SupportMask& mask) {
  MagnitudeTarget t = target;
  t.mode = MagnitudeMode::Ball;
  return step_with(Method::CBDR, state, t, &y, mask, 1.0, 1.0);
}

IterationState hio_step(const IterationState& state, const MagnitudeTarget& target, const SupportMask& mask,
                        double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  MagnitudeTarget t = target;
  t.mode = MagnitudeMode::Equality;
  t.dc_constraint.reset();
  return step_with(Method::HIO, state, t, nullptr, mask, beta, 1.0);
}

SolverRun run(const PhaseProblem& problem, const SolverConfig& config, const RunOptions& options) {
  problem.validate(config.allow_oversampled);
  if (config.method == Method::HIO) return hio_run(problem.measurements, problem.mask, config, options);
  return iterate(config.method, problem.measurements, problem.background, problem.mask, config, options);
}

SolverRun cbdr_parallel_real(const PhaseProblem& problem, const SolverConfig& config, const RunOptions& options) {
  problem.validate(config.allow_oversampled);
  SolverRun best;
  double best_me = 0.0;
  for (int sign : {1, -1}) {
    RunOptions branch = options;
    branch.target = MagnitudeTarget::ball_with_dc(problem.measurements, sign);
    SolverRun r = iterate(Method::CBDR, problem.measurements, problem.background, problem.mask, config, branch);
    const double me = measurement_error(r.final_estimate, problem.background, problem.mask, problem.measurements);
    if (sign == 1 || me < best_me) {
      best = std::move(r);
      best_me = me;
    }
  }
  return best;
}

SolverRun hio_run(const IntensityMeasurements& b, const SupportMask& mask, const SolverConfig& config,
                  const RunOptions& options) {
  return iterate(Method::HIO, b, zero_background(mask), mask, config, options);
}

}  // namespace bgpr
