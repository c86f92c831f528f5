#include "bgpr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "bgpr/analysis.hpp"
#include "bgpr/errors.hpp"
#include "bgpr/metrics.hpp"
#include "bgpr/random.hpp"
#include "bgpr/spectral.hpp"

namespace bgpr {

std::vector<double> gen_signal(int type, std::size_t n, std::uint64_t seed, const std::string& path) {
  switch (type) {
    case 1: {
      if (n == 0) throw ConfigError("signal length must be positive");
      Rng rng(seed);
      std::vector<double> x(n);
      for (double& v : x) v = rng.normal();
      return x;
    }
    case 2: {
      if (n == 0) throw ConfigError("signal length must be positive");
      std::vector<double> x(n);
      const double pi = std::numbers::pi;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / static_cast<double>(n + 1);
        x[i] = std::cos(39.2 * pi * t - 12.0 * std::sin(2.0 * pi * t)) +
               std::cos(85.4 * pi * t + 12.0 * std::sin(2.0 * pi * t));
      }
      return x;
    }
    case 3: {
      if (path.empty()) throw ConfigError("signal type 3 needs a CSV path");
      std::vector<double> x = read_signal_csv(path);
      if (n == 0) {
        if (x.empty()) throw DataError(path + ": no values");
        return x;
      }
      if (x.size() < n)
        throw DataError(path + ": has " + std::to_string(x.size()) + " values, need " + std::to_string(n));
      x.resize(n);
      return x;
    }
    default:
      throw ConfigError("unknown signal type " + std::to_string(type));
  }
}

RealArray gen_background(const SupportMask& mask, double mu, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw ConfigError("background sigma must be positive");
  Rng rng(seed);
  RealArray y(mask.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = rng.normal(mu, sigma);
    if (!mask.contains(i)) y.values[i] = v;
  }
  return y;
}

IntensityMeasurements add_noise(const IntensityMeasurements& b, const NoiseSpec& spec, std::uint64_t seed) {
  if (!(spec.sigma >= 0.0) || !(spec.background_bias >= 0.0)) throw ConfigError("noise levels must be nonnegative");
  if (spec.sigma == 0.0) return b;
  const Shape& shape = b.shape();
  Rng rng(seed);
  std::vector<double> g(shape.size());
  for (double& v : g) v = rng.normal(0.0, spec.sigma);
  RealArray out(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const double e = 0.5 * (g[i] + g[mirror_index(shape, i)]);
    const double root = std::max(0.0, std::sqrt(b.values().values[i]) + e);
    out.values[i] = root * root;
  }
  return IntensityMeasurements(std::move(out), true);
}

SupportMask make_mask(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                      const std::string& placement) {
  if (n.size() != k.size() || n.empty() || n.size() > 2) throw ConfigError("sample and background ranks differ");
  std::vector<std::size_t> grid(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) grid[i] = n[i] + k[i];
  const Shape g = Shape::from_extents(grid), s = Shape::from_extents(n);
  if (placement == "corner") return SupportMask::corner(g, s);
  if (placement == "center") return SupportMask::centered(g, s);
  throw ConfigError("unknown placement '" + placement + "'");
}

std::uint64_t cell_key(std::size_t n, std::size_t k) {
  return (static_cast<std::uint64_t>(n) << 32) ^ static_cast<std::uint64_t>(k);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell, std::size_t trial) {
  return derive_seed(master, cell, trial);
}

std::size_t resolve_workers(std::optional<std::size_t> requested) {
  if (requested) return std::max<std::size_t>(1, *requested);
  if (const char* env = std::getenv("BGRET_WORKERS"); env && *env) {
    std::size_t v = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v == 0)
      throw ConfigError("BGRET_WORKERS must be a positive integer (got '" + s + "')");
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Cell make_cell(const std::vector<std::size_t>& n, double k_ratio) {
  if (!(k_ratio >= 0.0)) throw ConfigError("k_ratio must be nonnegative");
  Cell c{n, {}};
  for (std::size_t v : n) c.k.push_back(static_cast<std::size_t>(std::lround(k_ratio * static_cast<double>(v))));
  return c;
}

namespace {

double dynamic_range(const std::vector<double>& x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double r = *hi - *lo;
  return r > 0.0 ? r : 1.0;
}

TrialOutcome run_instance(const ExperimentConfig& config, Method method, const Cell& cell, std::size_t trial,
                          const RealArray* image, const std::vector<std::size_t>* offset) {
  if (cell.n.size() != cell.k.size() || cell.n.empty()) throw ConfigError("cell ranks do not match");
  const std::uint64_t seed = trial_seed(config.seed, cell_key(cell.n[0], cell.k[0]), trial);
  const Shape sample_shape = Shape::from_extents(cell.n);

  std::vector<double> x;
  if (image) {
    if (!(image->shape == sample_shape))
      throw ShapeError("image " + image->shape.to_string() + " does not match sample " + sample_shape.to_string());
    x = image->values;
  } else if (cell.n.size() == 1) {
    x = gen_signal(config.signal_type, cell.n[0], derive_seed(seed, kSignalStream), config.paths.count("signal") ? config.paths.at("signal") : "");
  } else {
    x = gen_signal(1, sample_shape.size(), derive_seed(seed, kSignalStream));
  }

  SupportMask mask;
  if (offset) {
    std::vector<std::size_t> grid(cell.n.size());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = cell.n[i] + cell.k[i];
    mask = SupportMask::block(Shape::from_extents(grid), sample_shape, *offset);
  } else {
    mask = make_mask(cell.n, cell.k, config.placement);
  }
  const RealArray y = gen_background(mask, config.background_mu, config.background_sigma,
                                     derive_seed(seed, kBackgroundStream));
  const CombinedObject z = assemble(x, y, mask);
  IntensityMeasurements b = intensity(z);
  if (config.noise_sigma > 0.0) b = add_noise(b, NoiseSpec{config.noise_sigma, 0.0}, derive_seed(seed, kNoiseStream));

  SolverConfig sc;
  sc.method = method;
  sc.eps = config.eps;
  sc.max_iter = config.max_iter;
  sc.beta = config.beta;
  sc.lambda = config.lambda;
  sc.seed = seed;
  sc.record_trace = false;
  sc.stop_relative_error = config.stop_relative_error;

  const RealArray truth(sample_shape, x);
  RunOptions options;
  options.truth = &truth;
  const PhaseProblem problem{b, y, mask};

  TrialOutcome out;
  out.row.trial = trial;
  out.row.seed = seed;
  out.row.method = method;
  out.row.n = cell.n;
  out.row.k = cell.k;

  const auto start = std::chrono::steady_clock::now();
  SolverRun result;
  try {
    result = (method == Method::CBDR && config.cbdr_dc_branches) ? cbdr_parallel_real(problem, sc, options)
                                                                 : run(problem, sc, options);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.error = e.what();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.row.iterations = config.max_iter;
    out.row.relative_error = out.row.measurement_error = out.row.psnr = out.row.ssim = nan;
    out.row.success = false;
    return out;
  }
  const auto stop = std::chrono::steady_clock::now();

  const RealArray& est = result.final_estimate;
  const double range = dynamic_range(x);
  SsimParams sp;
  sp.dynamic_range = range;
  out.row.iterations = result.iterations_used;
  out.row.relative_error = relative_error(est, truth);
  out.row.measurement_error = measurement_error(est, y, mask, b);
  out.row.psnr = psnr(est, truth, range);
  out.row.ssim = ssim(est, truth, sp).value;
  out.row.success = success(out.row.relative_error);
  out.row.wall_ms =
      config.record_timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
  out.converged = result.converged;

  const RealArray pb = project_background(result.final_iterate, y, mask);
  const Spectrum s = dft_forward(pb, b.shape());
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst = std::max(worst, std::abs(std::norm(s.values[i]) - b.values().values[i]));
    peak = std::max(peak, b.values().values[i]);
  }
  out.fixed_point_residual = peak > 0.0 ? worst / peak : worst;
  return out;
}

}  // namespace

TrialOutcome run_trial(const ExperimentConfig& config, Method method, const Cell& cell, std::size_t trial,
                       const RealArray* image) {
  return run_instance(config, method, cell, trial, image, nullptr);
}

double quantile(std::vector<double> values, double q) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<TrialRow> SweepGrid::rows() const {
  std::vector<TrialRow> r;
  r.reserve(outcomes.size());
  for (const auto& o : outcomes) r.push_back(o.row);
  return r;
}

SweepGrid sweep_phase_transition(const ExperimentConfig& config, std::size_t workers) {
  config.validate();
  if (config.n.empty()) throw ConfigError("sweep needs a sample size n");
  std::vector<double> ratios = config.k_ratios;
  if (ratios.empty()) throw ConfigError("sweep needs k_ratio values");

  SweepGrid grid;
  for (Method m : config.methods)
    for (double r : ratios) {
      const Cell c = make_cell(config.n, r);
      grid.cells.push_back(SweepCell{m, c.n, r, c.k, config.trials, 0, 0.0, 0.0, 0.0});
    }
  const std::size_t trials = config.trials;
  grid.outcomes.resize(grid.cells.size() * trials);
  parallel_for(grid.outcomes.size(), workers, [&](std::size_t i) {
    const SweepCell& cell = grid.cells[i / trials];
    grid.outcomes[i] = run_trial(config, cell.method, Cell{cell.n, cell.k}, i % trials);
  });

  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    SweepCell& cell = grid.cells[c];
    double wall = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& row = grid.outcomes[c * trials + t].row;
      cell.successes += row.success ? 1 : 0;
      wall += row.wall_ms;
    }
    cell.rate = static_cast<double>(cell.successes) / static_cast<double>(trials);
    cell.rate_stderr = std::sqrt(cell.rate * (1.0 - cell.rate) / static_cast<double>(trials));
    cell.mean_wall_ms = wall / static_cast<double>(trials);
  }

  for (Method m : config.methods) {
    SweepGrid::Threshold th{m, config.n, std::nullopt, std::nullopt};
    std::vector<const SweepCell*> cells;
    for (const auto& c : grid.cells)
      if (c.method == m) cells.push_back(&c);
    std::sort(cells.begin(), cells.end(), [](auto* a, auto* b) { return a->k_ratio < b->k_ratio; });
    for (const SweepCell* c : cells) {
      if (!th.ratio90 && c->rate >= 0.90) th.ratio90 = c->k_ratio;
      if (!th.ratio99 && c->rate >= 0.99) th.ratio99 = c->k_ratio;
    }
    grid.thresholds.push_back(th);
  }
  return grid;
}

namespace {

std::string extents_text(const std::vector<std::size_t>& e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "x" : "") + std::to_string(e[i]);
  return s;
}

}  // namespace

std::string sweep_summary_csv(const SweepGrid& grid) {
  std::string text = "method,n,k_ratio,k,trials,successes,rate,rate_stderr,mean_wall_ms,threshold90,threshold99\n";
  for (const auto& c : grid.cells) {
    std::string t90 = "", t99 = "";
    for (const auto& th : grid.thresholds)
      if (th.method == c.method) {
        t90 = th.ratio90 ? format_double(*th.ratio90) : "none";
        t99 = th.ratio99 ? format_double(*th.ratio99) : "none";
      }
    text += std::string(to_string(c.method)) + "," + extents_text(c.n) + "," + format_double(c.k_ratio) + "," +
            extents_text(c.k) + "," + std::to_string(c.trials) + "," + std::to_string(c.successes) + "," +
            format_double(c.rate) + "," + format_double(c.rate_stderr) + "," + format_double(c.mean_wall_ms) + "," +
            t90 + "," + t99 + "\n";
  }
  return text;
}

std::vector<TrialRow> ImageBenchmark::rows() const {
  std::vector<TrialRow> r;
  for (const auto& o : outcomes) r.push_back(o.row);
  return r;
}

ImageBenchmark image_benchmark(const ExperimentConfig& config, const RealArray& image, std::size_t workers) {
  config.validate();
  if (image.shape.rank() != 2) throw ShapeError("image benchmark needs a 2-D image");
  if (config.k_ratios.empty() && config.k.empty()) throw ConfigError("image benchmark needs k_ratio or k1/k2");
  const std::vector<std::size_t> n{image.shape.rows(), image.shape.cols()};
  const Cell cell = config.k.size() == 2 ? Cell{n, config.k} : make_cell(n, config.k_ratios.front());

  ImageBenchmark bench;
  const std::size_t trials = config.trials;
  bench.outcomes.resize(config.methods.size() * trials);
  parallel_for(bench.outcomes.size(), workers, [&](std::size_t i) {
    bench.outcomes[i] = run_trial(config, config.methods[i / trials], cell, i % trials, &image);
  });
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    std::vector<double> p, s, e, w;
    ImageMethodSummary sum;
    sum.method = config.methods[m];
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& row = bench.outcomes[m * trials + t].row;
      p.push_back(row.psnr);
      s.push_back(row.ssim);
      e.push_back(row.relative_error);
      w.push_back(row.wall_ms);
      sum.successes += row.success ? 1 : 0;
    }
    sum.psnr_median = median(p);
    sum.psnr_q25 = quantile(p, 0.25);
    sum.psnr_q75 = quantile(p, 0.75);
    sum.ssim_median = median(s);
    sum.ssim_q25 = quantile(s, 0.25);
    sum.ssim_q75 = quantile(s, 0.75);
    sum.relerr_median = median(e);
    sum.wall_median_ms = median(w);
    bench.summaries.push_back(sum);
  }
  return bench;
}

std::string image_summary_csv(const ImageBenchmark& bench) {
  std::string text =
      "method,psnr_median,psnr_q25,psnr_q75,ssim_median,ssim_q25,ssim_q75,relative_error_median,wall_median_ms,"
      "successes\n";
  for (const auto& s : bench.summaries)
    text += std::string(to_string(s.method)) + "," + format_double(s.psnr_median) + "," + format_double(s.psnr_q25) +
            "," + format_double(s.psnr_q75) + "," + format_double(s.ssim_median) + "," + format_double(s.ssim_q25) +
            "," + format_double(s.ssim_q75) + "," + format_double(s.relerr_median) + "," +
            format_double(s.wall_median_ms) + "," + std::to_string(s.successes) + "\n";
  return text;
}

std::vector<LocationResult> location_bias_study(const ExperimentConfig& config, const RealArray& image,
                                                const std::vector<std::vector<std::size_t>>& offsets,
                                                std::size_t workers) {
  config.validate();
  if (image.shape.rank() != 2) throw ShapeError("location study needs a 2-D image");
  const std::vector<std::size_t> n{image.shape.rows(), image.shape.cols()};
  const Cell cell = config.k.size() == 2 ? Cell{n, config.k} : make_cell(n, config.k_ratios.front());
  for (const auto& off : offsets) {
    if (off.size() != 2) throw ConfigError("offsets must have two components");
    for (std::size_t a = 0; a < 2; ++a)
      if (off[a] > cell.k[a])
        throw ConfigError("offset (" + std::to_string(off[0]) + "," + std::to_string(off[1]) +
                          ") places the sample outside the grid");
  }
  std::vector<LocationResult> results(offsets.size());
  const std::size_t trials = config.trials;
  std::vector<TrialOutcome> all(offsets.size() * trials);
  const Method method = config.methods.front();
  parallel_for(all.size(), workers, [&](std::size_t i) {
    all[i] = run_instance(config, method, cell, i % trials, &image, &offsets[i / trials]);
  });
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    LocationResult& r = results[o];
    r.offset = offsets[o];
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& row = all[o * trials + t].row;
      r.mean_psnr += row.psnr;
      r.mean_ssim += row.ssim;
      r.mean_relative_error += row.relative_error;
      r.outcomes.push_back(all[o * trials + t]);
    }
    r.mean_psnr /= static_cast<double>(trials);
    r.mean_ssim /= static_cast<double>(trials);
    r.mean_relative_error /= static_cast<double>(trials);
  }
  return results;
}

std::string location_summary_csv(const std::vector<LocationResult>& results) {
  std::string text = "offset_row,offset_col,mean_psnr,mean_ssim,mean_relative_error\n";
  for (const auto& r : results)
    text += std::to_string(r.offset[0]) + "," + std::to_string(r.offset[1]) + "," + format_double(r.mean_psnr) + "," +
            format_double(r.mean_ssim) + "," + format_double(r.mean_relative_error) + "\n";
  return text;
}

std::vector<std::vector<std::size_t>> diagonal_offsets(const Cell& cell, std::size_t count) {
  if (count == 0) throw ConfigError("need at least one offset");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<std::size_t> off;
    for (std::size_t a = 0; a < cell.k.size(); ++a) {
      const double centre = static_cast<double>(cell.k[a] / 2);
      const double frac = count == 1 ? 1.0 : static_cast<double>(j) / static_cast<double>(count - 1);
      off.push_back(static_cast<std::size_t>(std::lround(frac * centre)));
    }
    out.push_back(off);
  }
  return out;
}

RealArray synthetic_image(std::size_t rows, std::size_t cols) {
  RealArray img(Shape(rows, cols));
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(rows);
      const double v = (static_cast<double>(j) + 0.5) / static_cast<double>(cols);
      double val = 0.15;
      val += 0.55 * std::exp(-((u - 0.3) * (u - 0.3) + (v - 0.35) * (v - 0.35)) / 0.02);
      val += 0.35 * std::exp(-((u - 0.7) * (u - 0.7) + (v - 0.65) * (v - 0.65)) / 0.008);
      if ((u - 0.68) * (u - 0.68) + (v - 0.25) * (v - 0.25) < 0.018) val += 0.3;
      if (u > 0.15 && u < 0.85 && v > 0.8 && v < 0.88) val += 0.25;
      val += 0.08 * std::sin(2.0 * pi * 9.0 * u) * std::cos(2.0 * pi * 7.0 * v);
      val += 0.05 * std::sin(2.0 * pi * (13.0 * u + 5.0 * v));
      img.values[i * cols + j] = val;
    }
  const auto [lo, hi] = std::minmax_element(img.values.begin(), img.values.end());
  const double a = *lo, span = *hi - *lo;
  for (double& v : img.values) v = (v - a) / span;
  return img;
}

namespace {

struct AnalysisInstance {
  SupportMask mask;
  RealArray x, y;
  CombinedObject z;
};

AnalysisInstance analysis_instance(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                                   std::uint64_t seed) {
  AnalysisInstance inst;
  inst.mask = make_mask(n, k, "corner");
  const Shape s = Shape::from_extents(n);
  inst.x = RealArray(s, gen_signal(1, s.size(), derive_seed(seed, kSignalStream)));
  inst.y = gen_background(inst.mask, 0.0, 1.0, derive_seed(seed, kBackgroundStream));
  inst.z = assemble(inst.x, inst.y, inst.mask);
  return inst;
}

double frobenius_distance(const RealArray& a, const RealArray& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(acc);
}

}  // namespace

UniquenessReport verify_uniqueness(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                                   std::size_t draws, std::uint64_t seed) {
  UniquenessReport rep;
  rep.draws = draws;
  for (std::size_t d = 0; d < draws; ++d) {
    const AnalysisInstance inst = analysis_instance(n, k, derive_seed(seed, d));
    const RealArray r = autocorrelation_from_intensity(intensity(inst.z));
    const LinearSystem sys = build_linear_system(inst.y, inst.mask, r);
    const LeastSquaresResult ls = least_squares_recover(sys);
    const double e = relative_error(ls.x, inst.x);
    rep.max_relative_error = std::max(rep.max_relative_error, e);
    if (ls.unique) ++rep.full_rank;
    if (ls.unique && e < 1e-8) ++rep.recovered;
  }
  rep.pass_rate = draws ? static_cast<double>(rep.recovered) / static_cast<double>(draws) : 0.0;
  return rep;
}

StabilityReport verify_stability(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k,
                                 std::size_t pairs, std::uint64_t seed) {
  StabilityReport rep;
  rep.pairs = pairs;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::uint64_t s = derive_seed(seed, p);
    const AnalysisInstance a = analysis_instance(n, k, s);
    const RealArray x2(a.x.shape, gen_signal(1, a.x.size(), derive_seed(s, 7)));
    const CombinedObject z2 = assemble(x2, a.y, a.mask);
    const IntensityMeasurements i1 = intensity(a.z), i2 = intensity(z2);
    const LinearSystem sys = build_linear_system(a.y, a.mask, autocorrelation_from_intensity(i1));
    const StabilityConstants c = stability_constants(sys);
    double l1 = 0.0;
    for (std::size_t i = 0; i < i1.values().size(); ++i)
      l1 += std::abs(i1.values().values[i] - i2.values().values[i]);
    const double lhs = frobenius_distance(a.x, x2);
    const double rhs = c.bound_factor * l1;
    rep.max_ratio = std::max(rep.max_ratio, lhs / rhs);
    if (lhs > rhs) ++rep.violations;
  }
  return rep;
}

RobustnessReport verify_robustness(const std::vector<std::size_t>& n, const std::vector<std::size_t>& k, double c1,
                                   double c2, std::size_t instances, std::uint64_t seed) {
  RobustnessReport rep;
  rep.instances = instances;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::uint64_t s = derive_seed(seed, t);
    const AnalysisInstance a = analysis_instance(n, k, s);
    const IntensityMeasurements clean = intensity(a.z);
    const Shape& m = clean.shape();
    Rng rng(derive_seed(s, kNoiseStream));
    std::vector<double> u(m.size());
    for (double& v : u) v = rng.uniform(-c1, c1);
    RealArray noisy(m);
    for (std::size_t i = 0; i < m.size(); ++i)
      noisy.values[i] = clean.values().values[i] + 0.5 * (u[i] + u[mirror_index(m, i)]);
    RealArray y_tilde = a.y;
    for (std::size_t i = 0; i < y_tilde.size(); ++i) {
      const double e2 = rng.uniform(-c2, c2);
      if (!a.mask.contains(i)) y_tilde.values[i] += e2;
    }
    const LinearSystem sys = build_linear_system(y_tilde, a.mask, autocorrelation_from_spectrum(noisy));
    const LeastSquaresResult ls = least_squares_recover(sys);
    const double err = frobenius_distance(ls.x, a.x);
    const double bound = robustness_bound(sys, c1, c2, noisy, y_tilde);
    rep.max_ratio = std::max(rep.max_ratio, err / bound);
    if (!(err <= bound)) ++rep.violations;

    const StabilityConstants sc = stability_constants(sys);
    const double expect = c1 * sc.delta1 * sc.delta2;
    const double got = robustness_bound(sys, c1, 0.0, noisy, y_tilde);
    const double dev = expect != 0.0 ? std::abs(got - expect) / expect : std::abs(got);
    rep.c2_zero_max_deviation = std::max(rep.c2_zero_max_deviation, dev);
  }
  return rep;
}

LMatrixReport verify_lmatrix(std::size_t n, std::size_t k, std::size_t draws, std::uint64_t seed) {
  const std::vector<double> x = gen_signal(1, n, derive_seed(seed, kSignalStream));
  return LMatrixReport{draws, l_nonsingular_check(x, k, draws, derive_seed(seed, kBackgroundStream))};
}

FripReport verify_frip(std::size_t n, std::size_t k, std::size_t num_h, std::size_t draws, std::uint64_t seed) {
  if (k == 0) throw ConfigError("frip check needs k >= 1");
  const std::vector<double> x = gen_signal(1, n, derive_seed(seed, kSignalStream));
  FripReport rep;
  rep.c1_floor = static_cast<double>(k > n ? k - n : 0) / static_cast<double>(k);
  rep.pass = true;
  for (std::size_t i = 0; i < num_h; ++i) {
    const RealArray h = sample_c2(Shape(n + k), derive_seed(seed, 100 + i));
    const FripCheck c = frip_expectation_check(x, h.values, draws, derive_seed(seed, 200 + i));
    FripEntry e{c.empirical_mean, c.predicted, c.std_error, c.c1, c.within_three_stderr, c.c1 >= rep.c1_floor};
    rep.pass = rep.pass && e.within && e.c1_above_floor;
    rep.entries.push_back(e);
  }
  return rep;
}

LocalConvergenceReport verify_local_convergence(std::size_t n, std::size_t k, std::size_t instances,
                                                double perturbation, std::size_t max_iter, std::uint64_t seed) {
  LocalConvergenceReport rep;
  rep.instances = instances;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::uint64_t s = derive_seed(seed, t);
    const AnalysisInstance inst = analysis_instance({n}, {k}, s);
    Rng rng(derive_seed(s, kNoiseStream));
    std::vector<double> dir(n);
    double norm = 0.0;
    for (double& v : dir) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    RealArray start = inst.z.values();
    const auto idx = inst.mask.indices();
    for (std::size_t i = 0; i < n; ++i) start.values[idx[i]] += perturbation * dir[i] / norm;

    SolverConfig sc;
    sc.method = Method::BDR;
    sc.max_iter = max_iter;
    sc.eps = 1e-15;
    RunOptions options;
    options.truth = &inst.x;
    options.initial = start;
    const SolverRun result = run(PhaseProblem{intensity(inst.z), inst.y, inst.mask}, sc, options);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < result.trace.size(); ++p) {
      const double e = result.trace[p].relative_error;
      if (!(e > 1e-13) || !std::isfinite(e)) break;
      const double x = static_cast<double>(p + 1), ly = std::log(e);
      sx += x;
      sy += ly;
      sxx += x * x;
      sxy += x * ly;
      ++count;
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (count >= 2) {
      const double c = static_cast<double>(count);
      slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
    }
    rep.slopes.push_back(slope);
    if (slope < 0.0) ++rep.negative_slope;
  }
  return rep;
}

}  // namespace bgpr
