// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bgpr/harness.hpp"
#include "bgpr/metrics.hpp"
#include "bgpr/projections.hpp"
#include "bgpr/random.hpp"
#include "bgpr/spectral.hpp"

using namespace bgpr;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  char timing[96];
  if (limit_s > 0)
    std::snprintf(timing, sizeof timing, "%.1fs (limit %.0fs)", secs, limit_s);
  else
    std::snprintf(timing, sizeof timing, "%.1fs", secs);
  std::printf("%s  criterion %2d  %-34s %s  %s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(), timing,
              o.detail.c_str(), in_time ? "" : "  [over time limit]");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RealArray random_array(const Shape& s, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  RealArray a(s);
  for (double& v : a.values) v = nd(gen);
  return a;
}

Shape random_shape(std::mt19937_64& gen, std::size_t max_extent) {
  std::uniform_int_distribution<std::size_t> ext(1, max_extent);
  if (gen() % 2) return Shape(ext(gen));
  return Shape(ext(gen), ext(gen));
}

ExperimentConfig sweep_config(std::vector<Method> methods, std::vector<double> ratios, std::size_t trials) {
  ExperimentConfig c;
  c.methods = std::move(methods);
  c.n = {100};
  c.k_ratios = std::move(ratios);
  c.trials = trials;
  c.seed = kSeed;
  c.max_iter = 300;
  c.record_timing = false;
  return c;
}

const SweepCell* find_cell(const SweepGrid& g, Method m, double ratio) {
  for (const auto& c : g.cells)
    if (c.method == m && std::abs(c.k_ratio - ratio) < 1e-9) return &c;
  return nullptr;
}

std::vector<TrialOutcome> fixed_point_pool;

void collect(const std::vector<TrialOutcome>& outcomes) {
  for (const auto& o : outcomes)
    if ((o.row.method == Method::BDR || o.row.method == Method::CBDR) && o.converged) fixed_point_pool.push_back(o);
}

}  // namespace

int main() {
  const std::size_t workers = resolve_workers(std::nullopt);
  std::printf("acceptance: master seed %llu, %zu worker(s)\n", static_cast<unsigned long long>(kSeed), workers);

  criterion(1, "Wiener-Khinchin oracle", 5, [] {
    std::mt19937_64 gen(kSeed);
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
      const RealArray z = random_array(random_shape(gen, 64), gen);
      const RealArray a = autocorrelation_from_intensity(intensity(z));
      const RealArray d = autocorrelation_direct(z);
      double nsq = 0, dev = 0;
      for (double v : z.values) nsq += v * v;
      for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a.values[i] - d.values[i]));
      worst = std::max(worst, dev / nsq);
    }
    return Outcome{worst <= 1e-9, fmt("max deviation / |z|^2 = %.2e (tol 1e-9)", worst)};
  });

  criterion(2, "projection contracts", 5, [] {
    std::mt19937_64 gen(kSeed + 1);
    double eq = 0, feas = 0, idem = 0;
    std::size_t affine_bad = 0;
    for (int t = 0; t < 500; ++t) {
      const Shape s = random_shape(gen, 40);
      const RealArray z0 = random_array(s, gen);
      const IntensityMeasurements b = intensity(z0);
      const MagnitudeTarget te = MagnitudeTarget::from_intensity(b);
      const MagnitudeTarget tb = MagnitudeTarget::from_intensity(b, MagnitudeMode::Ball);
      double rmax = 0;
      for (double v : te.root_intensity.values) rmax = std::max(rmax, v);
      const double scale = rmax > 0 ? rmax : 1.0;

      RealArray u = random_array(s, gen);
      for (double& v : u.values) v *= 3.0;
      const Spectrum se = dft_forward(project_magnitude(u, te));
      for (std::size_t i = 0; i < se.size(); ++i)
        eq = std::max(eq, std::abs(std::abs(se.values[i]) - te.root_intensity.values[i]) / scale);

      const RealArray pb = project_magnitude_ball(u, tb);
      const Spectrum sb = dft_forward(pb);
      for (std::size_t i = 0; i < sb.size(); ++i)
        feas = std::max(feas, (std::abs(sb.values[i]) - tb.root_intensity.values[i]) / scale);
      const RealArray pbb = project_magnitude_ball(pb, tb);
      for (std::size_t i = 0; i < pb.size(); ++i) idem = std::max(idem, std::abs(pbb.values[i] - pb.values[i]) / scale);

      const SupportMask mask = s.rank() == 1 ? SupportMask::corner(s, Shape((s.cols() + 1) / 2))
                                             : SupportMask::corner(s, Shape((s.rows() + 1) / 2, (s.cols() + 1) / 2));
      RealArray y = random_array(s, gen);
      for (std::size_t f : mask.indices()) y.values[f] = 0;
      const RealArray v = random_array(s, gen);
      RealArray mix(s);
      for (std::size_t i = 0; i < s.size(); ++i) mix.values[i] = 0.5 * u.values[i] + 0.5 * v.values[i];
      const RealArray pu = project_background(u, y, mask), pv = project_background(v, y, mask);
      const RealArray pm = project_background(mix, y, mask);
      for (std::size_t i = 0; i < s.size(); ++i)
        if (pm.values[i] != 0.5 * pu.values[i] + 0.5 * pv.values[i]) ++affine_bad;
      if (project_background(pu, y, mask).values != pu.values) ++affine_bad;
    }
    const bool ok = eq <= 1e-10 && feas <= 1e-12 && idem <= 1e-12 && affine_bad == 0;
    return Outcome{ok, fmt("equality %.1e (tol 1e-10), ball feasibility %.1e, idempotence %.1e (tol 1e-12), "
                           "P_B mismatches %zu",
                           eq, std::max(feas, 0.0), idem, affine_bad)};
  });

  criterion(3, "uniqueness oracle 1-D", 30, [] {
    const UniquenessReport r = verify_uniqueness({20}, {59}, 100, kSeed);
    return Outcome{r.recovered >= 99, fmt("%zu/100 recovered, max error %.1e", r.recovered, r.max_relative_error)};
  });

  criterion(4, "uniqueness oracle 2-D", 120, [] {
    const UniquenessReport r = verify_uniqueness({8, 8}, {12, 12}, 100, kSeed);
    return Outcome{r.recovered >= 99, fmt("%zu/100 full rank and recovered (%zu full rank)", r.recovered, r.full_rank)};
  });

  criterion(5, "stability inequality", 60, [] {
    const StabilityReport r = verify_stability({6, 6}, {9, 9}, 100, kSeed);
    return Outcome{r.violations == 0, fmt("%zu violations in 100 pairs, max lhs/rhs %.2e", r.violations, r.max_ratio)};
  });

  criterion(6, "robustness bound", 120, [] {
    const RobustnessReport r = verify_robustness({6, 6}, {9, 9}, 1e-3, 1e-3, 100, kSeed);
    const bool ok = r.violations == 0 && r.c2_zero_max_deviation <= 1e-12;
    return Outcome{ok, fmt("%zu violations in 100, max error/bound %.2e, c2=0 deviation %.1e", r.violations,
                           r.max_ratio, r.c2_zero_max_deviation)};
  });

  std::string crit7_csv;
  criterion(7, "phase transition (desk scale)", 900, [&] {
    const SweepGrid g = sweep_phase_transition(sweep_config({Method::BDR, Method::PGD}, {2.0, 3.0}, 100), workers);
    crit7_csv = results_to_csv(g.rows());
    collect(g.outcomes);
    const double bdr3 = find_cell(g, Method::BDR, 3.0)->rate;
    const double pgd3 = find_cell(g, Method::PGD, 3.0)->rate;
    const double bdr2 = find_cell(g, Method::BDR, 2.0)->rate;
    const bool ok = bdr3 >= 0.80 && pgd3 <= 0.45 && bdr2 >= 0.40 && bdr2 <= 0.80;
    return Outcome{ok, fmt("BDR@3 %.2f (>= 0.80), PGD@3 %.2f (<= 0.45), BDR@2 %.2f (in [0.40, 0.80])", bdr3, pgd3,
                           bdr2)};
  });

  criterion(8, "BDR 99% transition", 1200, [&] {
    std::vector<double> grid;
    for (int i = 0; i <= 8; ++i) grid.push_back(2.0 + 0.2 * i);
    const SweepGrid g = sweep_phase_transition(sweep_config({Method::BDR}, grid, 100), workers);
    collect(g.outcomes);
    std::string rates;
    for (const auto& c : g.cells) rates += fmt(" %.1f:%.2f", c.k_ratio, c.rate);
    const auto& th = g.thresholds.front();
    if (!th.ratio99) return Outcome{false, "no grid point reaches 0.99; rates" + rates};
    const bool ok = *th.ratio99 >= 2.4 - 1e-9 && *th.ratio99 <= 3.2 + 1e-9;
    return Outcome{ok, fmt("threshold %.1f (in [2.4, 3.2]); rates", *th.ratio99) + rates};
  });

  criterion(9, "CBDR regime", 600, [&] {
    const SweepGrid g = sweep_phase_transition(sweep_config({Method::CBDR}, {6.0}, 50), workers);
    collect(g.outcomes);
    const double rate = g.cells.front().rate;
    return Outcome{rate >= 0.80, fmt("rate %.2f (>= 0.80)", rate)};
  });

  criterion(10, "2-D benchmark (64x64)", 600, [&] {
    ExperimentConfig c;
    c.methods = {Method::BDR, Method::PGD};
    c.n.clear();
    c.k_ratios = {0.6};
    c.trials = 10;
    c.seed = kSeed;
    c.record_timing = false;
    const ImageBenchmark b = image_benchmark(c, synthetic_image(64, 64), workers);
    collect(b.outcomes);
    const double gap = b.summaries[0].psnr_median - b.summaries[1].psnr_median;
    return Outcome{gap > 15.0, fmt("median PSNR BDR %.1f dB, PGD %.1f dB, gap %.1f dB (> 15)", b.summaries[0].psnr_median,
                                   b.summaries[1].psnr_median, gap)};
  });

  criterion(11, "fixed-point property", 0, [] {
    double worst = 0;
    std::size_t bad = 0;
    for (const auto& o : fixed_point_pool) {
      worst = std::max(worst, o.fixed_point_residual);
      if (!(o.fixed_point_residual <= 1e-8)) ++bad;
    }
    return Outcome{bad == 0 && !fixed_point_pool.empty(),
                   fmt("%zu converged BDR/CBDR runs, %zu above 1e-8, max residual %.1e", fixed_point_pool.size(), bad,
                       worst)};
  });

  criterion(12, "local R-linear behaviour", 300, [] {
    const LocalConvergenceReport r = verify_local_convergence(50, 150, 50, 1e-3, 300, kSeed);
    std::vector<double> s = r.slopes;
    std::erase_if(s, [](double v) { return std::isnan(v); });
    const double med = s.empty() ? std::nan("") : median(s);
    return Outcome{r.negative_slope >= 45,
                   fmt("%zu/50 negative slopes (>= 45), median slope %.3f (rate %.3f)", r.negative_slope, med,
                       std::exp(med))};
  });

  criterion(13, "F-RIP expectation oracle", 300, [] {
    const FripReport r = verify_frip(16, 256, 5, 2000, kSeed);
    std::string d;
    for (const auto& e : r.entries)
      d += fmt(" [%.3f vs %.3f, 3se %.3f, c1 %.3f]", e.empirical_mean, e.predicted, 3 * e.std_error, e.c1);
    return Outcome{r.pass, fmt("c1 floor %.4f;", r.c1_floor) + d};
  });

  criterion(14, "L non-singularity", 60, [] {
    const LMatrixReport r = verify_lmatrix(8, 24, 100, kSeed);
    return Outcome{r.nonsingular_fraction >= 0.99, fmt("nonsingular fraction %.2f (>= 0.99)", r.nonsingular_fraction)};
  });

  criterion(15, "noise study (64x64, sigma 1e-3)", 900, [&] {
    ExperimentConfig c;
    c.methods = {Method::BDR1, Method::PGD, Method::BDR};
    c.n.clear();
    c.k_ratios = {3.0};
    c.trials = 20;
    c.seed = kSeed;
    c.noise_sigma = 1e-3;
    c.beta = 0.9;
    c.record_timing = false;
    const ImageBenchmark b = image_benchmark(c, synthetic_image(64, 64), workers);
    std::size_t wins = 0;
    for (std::size_t t = 0; t < 20; ++t)
      if (b.outcomes[t].row.relative_error < b.outcomes[40 + t].row.relative_error) ++wins;
    return Outcome{wins >= 12, fmt("BDR1 beats BDR in %zu/20 (>= 12); median rel. error BDR1 %.2e, PGD %.2e, BDR %.2e",
                                   wins, b.summaries[0].relerr_median, b.summaries[1].relerr_median,
                                   b.summaries[2].relerr_median)};
  });

  criterion(16, "determinism across worker counts", 0, [&] {
    const auto cfg = sweep_config({Method::BDR, Method::PGD}, {2.0, 3.0}, 100);
    const std::string again = results_to_csv(sweep_phase_transition(cfg, workers).rows());
    const std::size_t other = workers == 1 ? 4 : 1;
    const std::string threaded = results_to_csv(sweep_phase_transition(cfg, other).rows());
    const bool ok = !crit7_csv.empty() && again == crit7_csv && threaded == crit7_csv;
    return Outcome{ok, fmt("workers %zu and %zu vs criterion 7: SHA-256 %s / %s / %s", workers, other,
                           sha256_hex(crit7_csv).substr(0, 12).c_str(), sha256_hex(again).substr(0, 12).c_str(),
                           sha256_hex(threaded).substr(0, 12).c_str())};
  });

  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
