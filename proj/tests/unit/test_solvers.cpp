#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "bgpr/errors.hpp"
#include "bgpr/metrics.hpp"
#include "bgpr/solvers.hpp"
#include "bgpr/spectral.hpp"
#include "oracles.hpp"

using namespace bgpr;

namespace {

struct Instance {
  SupportMask mask;
  RealArray x, y, z;
  IntensityMeasurements b;
  PhaseProblem problem() const { return PhaseProblem{b, y, mask}; }
};

Instance make_instance(const Shape& grid, const Shape& sample, std::mt19937_64& gen) {
  const SupportMask mask = SupportMask::corner(grid, sample);
  RealArray y = oracle::random_array(grid, gen);
  for (std::size_t f : mask.indices()) y.values[f] = 0.0;
  const RealArray x = oracle::random_array(sample, gen);
  const CombinedObject z = assemble(x, y, mask);
  return Instance{mask, x, y, z.values(), intensity(z.values())};
}

double dist(const RealArray& a, const RealArray& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(s);
}

RealArray pb(const RealArray& z, const Instance& in) { return project_background(z, in.y, in.mask); }

}  // namespace

TEST_CASE("bdr_step example") {
  const SupportMask mask = SupportMask::corner(Shape(2), Shape(1));
  const RealArray y(Shape(2), {0, 5});
  const RealArray z(Shape(2), {2, 3});
  const MagnitudeTarget t = MagnitudeTarget::from_intensity(intensity(z));
  const IterationState next = bdr_step(IterationState{z, 0, 0.0}, t, y, mask, 1.0);
  CHECK(next.z.values[0] == doctest::Approx(2.0));
  CHECK(next.z.values[1] == doctest::Approx(5.0));
  CHECK(next.iter == 1);
  CHECK(next.last_step_norm == doctest::Approx(2.0));
}

TEST_CASE("hio_step example") {
  const SupportMask mask = SupportMask::corner(Shape(3), Shape(1));
  const RealArray z(Shape(3), {2, 3, -1});
  const MagnitudeTarget t = MagnitudeTarget::from_intensity(intensity(z));
  const IterationState next = hio_step(IterationState{z, 0, 0.0}, t, mask, 0.5);
  CHECK(next.z.values[0] == doctest::Approx(2.0));
  CHECK(next.z.values[1] == doctest::Approx(1.5));
  CHECK(next.z.values[2] == doctest::Approx(-0.5));
  CHECK_THROWS_AS(hio_step(IterationState{z, 0, 0.0}, t, mask, 0.0), ConfigError);
}

TEST_CASE("init_spectral examples") {
  const SupportMask mask = SupportMask::corner(Shape(2), Shape(1));
  const IterationState s = init_spectral(IntensityMeasurements(RealArray(Shape(2), {4, 0}), true),
                                         RealArray(Shape(2), {0, 7}), mask);
  CHECK(s.z.values[0] == doctest::Approx(1.0));
  CHECK(s.z.values[1] == 7.0);

  const SupportMask m3 = SupportMask::corner(Shape(5), Shape(2));
  const IterationState zero = init_spectral(IntensityMeasurements(RealArray(Shape(5)), true), RealArray(Shape(5)), m3);
  for (double v : zero.z.values) CHECK(v == 0.0);
}

TEST_CASE("one PGD step with lambda = 1 is P_B after P_A") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const Instance in = make_instance(Shape(9 + t), Shape(3 + t % 4), gen);
    const MagnitudeTarget tg = MagnitudeTarget::from_intensity(in.b);
    const RealArray z = oracle::random_array(in.z.shape, gen);
    const RealArray ref = pb(project_magnitude(z, tg), in);
    const IterationState s = pgd_step(IterationState{z, 0, 0.0}, tg, in.y, in.mask, 1.0);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(s.z.values[i] - ref.values[i]) <= 1e-12);
  }
}

TEST_CASE("BDR with beta = 1 is the averaged reflection map") {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 20; ++t) {
    const Instance in = make_instance(t % 2 ? Shape(6, 7) : Shape(15), t % 2 ? Shape(2, 3) : Shape(5), gen);
    const MagnitudeTarget tg = MagnitudeTarget::from_intensity(in.b);
    const RealArray z = oracle::random_array(in.z.shape, gen);
    const Projector pa = [&](const RealArray& v) { return project_magnitude(v, tg); };
    const Projector pbf = [&](const RealArray& v) { return pb(v, in); };
    const RealArray rr = reflect(reflect(z, pa), pbf);
    const IterationState s = bdr_step(IterationState{z, 0, 0.0}, tg, in.y, in.mask, 1.0);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(std::abs(s.z.values[i] - 0.5 * (rr.values[i] + z.values[i])) <= 1e-12);
  }
}

TEST_CASE("PGD distance to A is non-increasing") {
  std::mt19937_64 gen(3);
  const Instance in = make_instance(Shape(40), Shape(10), gen);
  const MagnitudeTarget tg = MagnitudeTarget::from_intensity(in.b);
  IterationState s = init_spectral(in.b, in.y, in.mask);
  double prev = dist(s.z, project_magnitude(s.z, tg));
  for (int p = 0; p < 100; ++p) {
    s = pgd_step(s, tg, in.y, in.mask, 1.0);
    const double f = dist(s.z, project_magnitude(s.z, tg));
    CHECK(f <= prev * (1 + 1e-12) + 1e-12);
    prev = f;
  }
}

TEST_CASE("CBDR iterates are Fejer monotone towards the true object") {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 5; ++t) {
    const Instance in = make_instance(Shape(30), Shape(8), gen);
    const MagnitudeTarget tg = MagnitudeTarget::from_intensity(in.b, MagnitudeMode::Ball);
    IterationState s{oracle::random_array(in.z.shape, gen, 2.0), 0, 0.0};
    double prev = dist(s.z, in.z);
    for (int p = 0; p < 200; ++p) {
      s = cbdr_step(s, tg, in.y, in.mask);
      const double d = dist(s.z, in.z);
      CHECK(d <= prev + 1e-9);
      prev = d;
    }
  }
}

TEST_CASE("CBDR recovers most instances with a large background") {
  std::mt19937_64 gen(5);
  SolverConfig cfg;
  cfg.method = Method::CBDR;
  cfg.record_trace = false;
  int wins = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const Instance in = make_instance(Shape(140), Shape(20), gen);
    const SolverRun r = cbdr_parallel_real(in.problem(), cfg);
    if (success(relative_error(r.final_estimate, in.x))) ++wins;
  }
  CHECK(wins >= trials * 8 / 10);
}

TEST_CASE("starting at the truth converges immediately for every method") {
  std::mt19937_64 gen(6);
  const Instance in = make_instance(Shape(30), Shape(10), gen);
  for (Method m : {Method::PGD, Method::BDR, Method::CBDR}) {
    SolverConfig cfg;
    cfg.method = m;
    RunOptions opt;
    opt.truth = &in.x;
    opt.initial = in.z;
    const SolverRun r = run(in.problem(), cfg, opt);
    CHECK(r.converged);
    CHECK(r.stop_reason == StopReason::StepTolerance);
    CHECK(r.iterations_used <= 1);
    CHECK(relative_error(r.final_estimate, in.x) < 1e-12);
  }
}

TEST_CASE("BDR1 with beta < 1 moves away from the truth") {
  std::mt19937_64 gen(11);
  const Instance in = make_instance(Shape(30), Shape(10), gen);
  const MagnitudeTarget tg = MagnitudeTarget::from_intensity(in.b);
  const IterationState s = bdr_step(IterationState{in.z, 0, 0.0}, tg, in.y, in.mask, 0.9);
  double off = 0;
  for (std::size_t i = 0; i < in.z.size(); ++i)
    if (!in.mask.contains(i)) off += (s.z.values[i] - 1.1 * in.y.values[i]) * (s.z.values[i] - 1.1 * in.y.values[i]);
  CHECK(std::sqrt(off) < 1e-12);
  CHECK(s.last_step_norm > 1e-3);
}

TEST_CASE("HIO with a zero background keeps a support-only object fixed") {
  std::mt19937_64 gen(7);
  const SupportMask mask = SupportMask::corner(Shape(20), Shape(6));
  const RealArray x = oracle::random_array(Shape(6), gen);
  const CombinedObject z = assemble(x, RealArray(Shape(20)), mask);
  SolverConfig cfg;
  cfg.method = Method::HIO;
  RunOptions opt;
  opt.initial = z.values();
  const SolverRun r = hio_run(intensity(z.values()), mask, cfg, opt);
  CHECK(r.converged);
  CHECK(relative_error(r.final_estimate, x) < 1e-12);

  const SolverRun cold = hio_run(intensity(z.values()), mask, cfg);
  CHECK(cold.iterations_used >= 1);
  CHECK(cold.trace.size() == cold.iterations_used);
}

TEST_CASE("trace length, stop reasons and determinism") {
  std::mt19937_64 gen(8);
  const Instance in = make_instance(Shape(40), Shape(20), gen);
  SolverConfig cfg;
  cfg.max_iter = 25;
  RunOptions opt;
  opt.truth = &in.x;
  const SolverRun a = run(in.problem(), cfg, opt);
  const SolverRun b = run(in.problem(), cfg, opt);
  CHECK(a.trace.size() == a.iterations_used);
  CHECK(a.final_estimate.values == b.final_estimate.values);
  CHECK(a.final_iterate.values == b.final_iterate.values);
  if (!a.converged) CHECK(a.stop_reason == StopReason::MaxIterations);

  cfg.record_trace = false;
  CHECK(run(in.problem(), cfg, opt).trace.empty());

  SolverConfig target;
  target.stop_relative_error = 10.0;
  const SolverRun early = run(in.problem(), target, opt);
  CHECK(early.stop_reason == StopReason::TargetReached);
  CHECK(early.iterations_used == 1);
}

TEST_CASE("converged BDR runs sit at a fixed point consistent with the data") {
  std::mt19937_64 gen(9);
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    const Instance in = make_instance(Shape(80), Shape(20), gen);
    SolverConfig cfg;
    cfg.max_iter = 2000;
    const SolverRun r = run(in.problem(), cfg);
    if (!r.converged) continue;
    ++checked;
    const MagnitudeTarget tg = MagnitudeTarget::from_intensity(in.b);
    const IterationState again = bdr_step(IterationState{r.final_iterate, 0, 0.0}, tg, in.y, in.mask, 1.0);
    CHECK(dist(again.z, r.final_iterate) <= 1e-10);
    CHECK(measurement_error(r.final_estimate, in.y, in.mask, in.b) < 1e-8);
  }
  CHECK(checked > 0);
}

TEST_CASE("input validation") {
  std::mt19937_64 gen(10);
  const Instance in = make_instance(Shape(12), Shape(4), gen);
  SolverConfig cfg;

  RunOptions nan_start;
  nan_start.initial = in.z;
  nan_start.initial->values[5] = std::nan("");
  CHECK_THROWS_AS(run(in.problem(), cfg, nan_start), DivergenceError);

  PhaseProblem dirty = in.problem();
  dirty.background.values[0] = 1.0;
  CHECK_THROWS_AS(run(dirty, cfg), DataError);

  SolverConfig needs_truth;
  needs_truth.stop_relative_error = 1e-5;
  CHECK_THROWS_AS(run(in.problem(), needs_truth), ConfigError);

  RunOptions ball;
  ball.target = MagnitudeTarget::from_intensity(in.b, MagnitudeMode::Ball);
  CHECK_THROWS_AS(run(in.problem(), cfg, ball), ConfigError);

  const PhaseProblem over{intensity(in.z, Shape(20)), in.y, in.mask};
  CHECK_THROWS_AS(run(over, cfg), ConfigError);
  SolverConfig theory;
  theory.allow_oversampled = true;
  CHECK_NOTHROW(run(over, theory));

  const PhaseProblem wrong{in.b, RealArray(Shape(13)), in.mask};
  CHECK_THROWS_AS(run(wrong, cfg), ShapeError);

  SolverConfig bad;
  bad.beta = 2.0;
  CHECK_THROWS_AS(run(in.problem(), bad), ConfigError);
}
