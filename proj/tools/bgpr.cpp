// bgpr: command-line driver for Fourier phase retrieval with a known background.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bgpr/analysis.hpp"
#include "bgpr/errors.hpp"
#include "bgpr/harness.hpp"
#include "bgpr/io_formats.hpp"
#include "bgpr/metrics.hpp"
#include "bgpr/solvers.hpp"
#include "bgpr/spectral.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace bgpr;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kCheckFailed = 3 };

struct Global {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::size_t> workers;
  std::string preset = "desk";
};

ExperimentConfig preset_config(const std::string& preset, const std::string& command) {
  ExperimentConfig c;
  c.seed = 2024;
  c.trials = preset == "paper" ? 100 : 20;
  if (command == "sweep") {
    c.methods = {Method::BDR, Method::PGD};
    c.n = {100};
    c.trials = 100;
    c.k_ratios.clear();
    const double step = preset == "paper" ? 0.1 : 0.5;
    for (double r = 1.0; r <= 7.0 + 1e-9; r += step) c.k_ratios.push_back(std::round(r * 10.0) / 10.0);
  } else if (command == "image-bench" || command == "location-bias") {
    c.methods = {Method::BDR, Method::PGD};
    const std::size_t side = preset == "paper" ? 256 : 64;
    c.n = {side, side};
    c.k_ratios = {0.6};
    c.trials = preset == "paper" ? 100 : 10;
  } else if (command == "noise-bench") {
    c.methods = {Method::PGD, Method::BDR, Method::BDR1};
    const std::size_t side = preset == "paper" ? 256 : 64;
    c.n = {side, side};
    c.k_ratios = {3.0};
    c.noise_sigma = 0.001;
  }
  return c;
}

ExperimentConfig load_config(const Global& g, const std::string& command) {
  ExperimentConfig c = g.config_path.empty() ? preset_config(g.preset, command) : read_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

fs::path out_path(const Global& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

void write_with_manifest(const ExperimentConfig* config, std::uint64_t seed,
                         const std::map<std::string, std::string>& inputs, const fs::path& path,
                         const std::string& text) {
  write_text(path, text);
  RunManifest m;
  m.config_json = config ? config_to_json(*config) : "{}";
  m.software_version = software_version();
  m.seed = seed;
  m.created_utc = utc_timestamp();
  for (const auto& [name, file] : inputs) m.input_digests[name] = sha256_file(file);
  m.output_digests[path.filename().string()] = sha256_hex(text);
  write_manifest(manifest_path_for(path), m);
}

std::map<std::string, std::string> config_inputs(const Global& g, const ExperimentConfig& c) {
  std::map<std::string, std::string> in;
  if (!g.config_path.empty()) in["config"] = g.config_path;
  for (const auto& [k, v] : c.paths) in[k] = v;
  return in;
}

RealArray load_array(const std::string& path) {
  const fs::path p(path);
  const std::string ext = p.extension().string();
  if (ext == ".pgm") return read_image(p);
  RealArray a = read_image(p);
  if (a.shape.rank() == 2 && a.shape.rows() == 1) return RealArray(Shape(a.shape.cols()), a.values);
  if (a.shape.rank() == 2 && a.shape.cols() == 1) return RealArray(Shape(a.shape.rows()), a.values);
  return a;
}

void save_array(const fs::path& path, const RealArray& a) {
  if (a.shape.rank() == 1)
    write_signal_csv(path, a.values);
  else
    write_image(path, a);
}

RealArray load_image_or_synthetic(const ExperimentConfig& c) {
  if (c.paths.count("image")) return read_image(c.paths.at("image"));
  if (c.n.size() != 2) throw ConfigError("n: a 2-D size (n1, n2) or paths.image is required");
  return synthetic_image(c.n[0], c.n[1]);
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier phase retrieval with known background information"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--workers", g.workers, "worker threads (default $BGRET_WORKERS or hardware)");
  app.add_option("--preset", g.preset, "default experiment sizes")->check(CLI::IsMember({"desk", "paper"}));

  // gen-signal
  auto* gs = app.add_subcommand("gen-signal", "write a test signal");
  int gs_type = 1;
  std::size_t gs_n = 100;
  std::string gs_input;
  gs->add_option("--type", gs_type, "1 Gaussian, 2 chirp, 3 CSV")->check(CLI::Range(1, 3));
  gs->add_option("--n", gs_n, "length");
  gs->add_option("--input", gs_input, "source CSV for type 3");

  // gen-background
  auto* gb = app.add_subcommand("gen-background", "write a Gaussian background with a zero support block");
  std::vector<std::size_t> gb_n{100}, gb_k{300};
  double gb_mu = 0.0, gb_sigma = 1.0;
  std::string gb_place = "corner";
  gb->add_option("--n", gb_n, "sample extents")->expected(1, 2);
  gb->add_option("--k", gb_k, "background extents")->expected(1, 2);
  gb->add_option("--mu", gb_mu);
  gb->add_option("--sigma", gb_sigma);
  gb->add_option("--placement", gb_place)->check(CLI::IsMember({"corner", "center"}));

  // forward
  auto* fw = app.add_subcommand("forward", "compute intensity measurements of sample + background");
  std::string fw_sample, fw_background, fw_place = "corner";
  double fw_sigma = 0.0;
  fw->add_option("--sample", fw_sample, "signal CSV or image")->required()->check(CLI::ExistingFile);
  fw->add_option("--background", fw_background, "background array")->required()->check(CLI::ExistingFile);
  fw->add_option("--placement", fw_place)->check(CLI::IsMember({"corner", "center"}));
  fw->add_option("--noise-sigma", fw_sigma, "Gaussian noise on root intensities");

  // solve
  auto* sv = app.add_subcommand("solve", "recover the sample from intensities");
  std::string sv_method = "BDR", sv_intensity, sv_background, sv_truth, sv_place = "corner";
  std::vector<std::size_t> sv_n;
  std::size_t sv_iter = 300;
  double sv_beta = 0.9, sv_lambda = 1.0, sv_eps = 1e-12;
  sv->add_option("--method", sv_method, "PGD, BDR, BDR1, CBDR or HIO");
  sv->add_option("--intensity", sv_intensity)->required()->check(CLI::ExistingFile);
  sv->add_option("--background", sv_background, "background array (not used by HIO)")->check(CLI::ExistingFile);
  sv->add_option("--n", sv_n, "sample extents")->required()->expected(1, 2);
  sv->add_option("--truth", sv_truth, "ground truth for error reporting")->check(CLI::ExistingFile);
  sv->add_option("--placement", sv_place)->check(CLI::IsMember({"corner", "center"}));
  sv->add_option("--max-iter", sv_iter);
  sv->add_option("--beta", sv_beta);
  sv->add_option("--lambda", sv_lambda);
  sv->add_option("--eps", sv_eps);

  auto* sw = app.add_subcommand("sweep", "phase-transition sweep over k/n");
  auto* ib = app.add_subcommand("image-bench", "2-D benchmark over repeated backgrounds");
  auto* lb = app.add_subcommand("location-bias", "recovery quality versus support position");
  std::size_t lb_positions = 17;
  lb->add_option("--positions", lb_positions, "offsets from corner to centre");
  auto* nb = app.add_subcommand("noise-bench", "noisy 2-D benchmark");
  std::vector<double> nb_sigmas;
  nb->add_option("--sigma", nb_sigmas, "noise levels (default: config noise_sigma)");

  // verify
  auto* vf = app.add_subcommand("verify", "Monte Carlo checks of the analysis results");
  vf->require_subcommand(1);
  std::vector<std::size_t> v_n, v_k;
  std::size_t v_draws = 0;
  double v_c1 = 1e-3, v_c2 = 1e-3;
  std::size_t v_h = 5;
  int v_d = 0;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--n", v_n, "sample extents")->expected(1, 2);
    s->add_option("--k", v_k, "background extents")->expected(1, 2);
    s->add_option("--d", v_d, "dimension (repeats scalar --n/--k)");
  };
  auto* vu = vf->add_subcommand("uniqueness", "least-squares recovery from the autocorrelation");
  auto* vs = vf->add_subcommand("stability", "stability inequality on random pairs");
  auto* vr = vf->add_subcommand("robustness", "robustness bound under bounded noise");
  auto* vl = vf->add_subcommand("lmatrix", "non-singularity of the circulant L");
  auto* vp = vf->add_subcommand("frip", "F-RIP expectation identity");
  for (auto* s : {vu, vs, vr, vl, vp}) add_common(s);
  vu->add_option("--draws", v_draws);
  vs->add_option("--pairs", v_draws);
  vr->add_option("--instances", v_draws);
  vr->add_option("--c1", v_c1);
  vr->add_option("--c2", v_c2);
  vl->add_option("--draws", v_draws);
  vp->add_option("--draws", v_draws);
  vp->add_option("--num-h", v_h, "number of sampled h");

  // metrics
  auto* mt = app.add_subcommand("metrics", "compare an estimate with a reference");
  std::string mt_est, mt_ref;
  double mt_peak = 0.0;
  mt->add_option("--estimate", mt_est)->required()->check(CLI::ExistingFile);
  mt->add_option("--truth", mt_ref)->required()->check(CLI::ExistingFile);
  mt->add_option("--peak", mt_peak, "PSNR peak / SSIM dynamic range (default: reference max - min)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const std::uint64_t seed = g.seed.value_or(2024);
    const std::size_t workers = resolve_workers(g.workers);

    if (*gs) {
      const auto x = gen_signal(gs_type, gs_n, seed, gs_input);
      const fs::path p = out_path(g, "signal.csv");
      write_signal_csv(p, x);
      std::cout << p.string() << "\n";
      return kOk;
    }
    if (*gb) {
      if (gb_n.size() != gb_k.size()) throw ConfigError("--n and --k must have the same number of extents");
      const SupportMask mask = make_mask(gb_n, gb_k, gb_place);
      const RealArray y = gen_background(mask, gb_mu, gb_sigma, seed);
      const fs::path p = out_path(g, "background.csv");
      save_array(p, y);
      std::cout << p.string() << "\n";
      return kOk;
    }
    if (*fw) {
      const RealArray x = load_array(fw_sample);
      const RealArray y = load_array(fw_background);
      if (x.shape.rank() != y.shape.rank()) throw ShapeError("sample and background ranks differ");
      std::vector<std::size_t> n(x.shape.extents().begin(), x.shape.extents().end()), k;
      for (std::size_t a = 0; a < n.size(); ++a) {
        if (y.shape[a] < n[a]) throw ShapeError("background grid is smaller than the sample");
        k.push_back(y.shape[a] - n[a]);
      }
      const CombinedObject z = assemble(x, y, make_mask(n, k, fw_place));
      IntensityMeasurements b = intensity(z);
      if (fw_sigma > 0.0) b = add_noise(b, NoiseSpec{fw_sigma, 0.0}, seed);
      const fs::path p = out_path(g, "intensity.csv");
      save_array(p, b.values());
      std::cout << p.string() << "\n";
      return kOk;
    }
    if (*sv) {
      const Method method = parse_method(sv_method);
      RealArray bv = load_array(sv_intensity);
      const IntensityMeasurements b(bv, false);
      if (sv_n.size() != bv.shape.rank()) throw ShapeError("--n rank does not match the intensity array");
      std::vector<std::size_t> k;
      for (std::size_t a = 0; a < sv_n.size(); ++a) {
        if (bv.shape[a] < sv_n[a]) throw ShapeError("sample larger than the measurement grid");
        k.push_back(bv.shape[a] - sv_n[a]);
      }
      const SupportMask mask = make_mask(sv_n, k, sv_place);
      SolverConfig sc;
      sc.method = method;
      sc.max_iter = sv_iter;
      sc.beta = sv_beta;
      sc.lambda = sv_lambda;
      sc.eps = sv_eps;
      sc.seed = seed;
      sc.validate();
      std::optional<RealArray> truth;
      if (!sv_truth.empty()) truth = load_array(sv_truth);
      RunOptions opt;
      if (truth) opt.truth = &*truth;
      SolverRun r;
      if (method == Method::HIO) {
        r = hio_run(b, mask, sc, opt);
      } else {
        if (sv_background.empty()) throw ConfigError("--background is required for " + sv_method);
        const IntensityMeasurements bs(bv, true);
        const PhaseProblem problem{bs, load_array(sv_background), mask};
        r = method == Method::CBDR ? cbdr_parallel_real(problem, sc, opt) : run(problem, sc, opt);
      }
      save_array(out_path(g, "estimate.csv"), r.final_estimate);
      std::string trace = "iteration,relative_error,measurement_error\n";
      for (std::size_t i = 0; i < r.trace.size(); ++i)
        trace += std::to_string(i + 1) + "," + format_double(r.trace[i].relative_error) + "," +
                 format_double(r.trace[i].measurement_error) + "\n";
      write_text(out_path(g, "trace.csv"), trace);
      json rep{{"method", std::string(to_string(method))},
               {"iterations", r.iterations_used},
               {"converged", r.converged},
               {"last_step_norm", r.last_step_norm}};
      if (truth) rep["relative_error"] = relative_error(r.final_estimate, *truth);
      print_json(rep);
      return kOk;
    }
    if (*sw) {
      const ExperimentConfig c = load_config(g, "sweep");
      const SweepGrid grid = sweep_phase_transition(c, workers);
      const auto in = config_inputs(g, c);
      write_with_manifest(&c, c.seed, in, out_path(g, "results.csv"), results_to_csv(grid.rows()));
      write_with_manifest(&c, c.seed, in, out_path(g, "summary.csv"), sweep_summary_csv(grid));
      json th = json::array();
      for (const auto& t : grid.thresholds) {
        json e{{"method", std::string(to_string(t.method))}, {"n", t.n}};
        e["ratio90"] = t.ratio90 ? json(*t.ratio90) : json(nullptr);
        e["ratio99"] = t.ratio99 ? json(*t.ratio99) : json(nullptr);
        th.push_back(e);
      }
      print_json(json{{"thresholds", th}});
      return kOk;
    }
    if (*ib || *nb) {
      ExperimentConfig c = load_config(g, *ib ? "image-bench" : "noise-bench");
      const RealArray image = load_image_or_synthetic(c);
      const auto in = config_inputs(g, c);
      std::vector<double> sigmas = nb_sigmas;
      if (*ib || sigmas.empty()) sigmas = {c.noise_sigma};
      std::vector<TrialRow> rows;
      const std::string header = image_summary_csv(ImageBenchmark{});
      std::string summary = "noise_sigma," + header;
      for (double s : sigmas) {
        c.noise_sigma = s;
        const ImageBenchmark bench = image_benchmark(c, image, workers);
        const auto r = bench.rows();
        rows.insert(rows.end(), r.begin(), r.end());
        const std::string text = image_summary_csv(bench);
        std::size_t pos = text.find('\n') + 1;
        while (pos < text.size()) {
          const std::size_t end = text.find('\n', pos);
          summary += format_double(s) + "," + text.substr(pos, end - pos + 1);
          pos = end + 1;
        }
      }
      write_with_manifest(&c, c.seed, in, out_path(g, "results.csv"), results_to_csv(rows));
      write_with_manifest(&c, c.seed, in, out_path(g, "summary.csv"), summary);
      std::cout << summary;
      return kOk;
    }
    if (*lb) {
      const ExperimentConfig c = load_config(g, "location-bias");
      const RealArray image = load_image_or_synthetic(c);
      const std::vector<std::size_t> n{image.shape.rows(), image.shape.cols()};
      const Cell cell = c.k.size() == 2 ? Cell{n, c.k} : make_cell(n, c.k_ratios.front());
      const auto results = location_bias_study(c, image, diagonal_offsets(cell, lb_positions), workers);
      std::vector<TrialRow> rows;
      for (const auto& r : results)
        for (const auto& o : r.outcomes) rows.push_back(o.row);
      const auto in = config_inputs(g, c);
      write_with_manifest(&c, c.seed, in, out_path(g, "results.csv"), results_to_csv(rows));
      const std::string summary = location_summary_csv(results);
      write_with_manifest(&c, c.seed, in, out_path(g, "location.csv"), summary);
      std::cout << summary;
      return kOk;
    }
    if (*vf) {
      auto extents = [&](std::vector<std::size_t> v, std::size_t fallback) {
        if (v.empty()) v = {fallback};
        if (v_d == 2 && v.size() == 1) v.push_back(v[0]);
        return v;
      };
      json rep;
      bool pass = false;
      if (*vu) {
        const auto n = extents(v_n, 8), k = extents(v_k, 12);
        const auto r = verify_uniqueness(n, k, v_draws ? v_draws : 100, seed);
        pass = r.pass_rate >= 0.99;
        rep = {{"check", "uniqueness"}, {"n", n}, {"k", k}, {"draws", r.draws}, {"full_rank", r.full_rank},
               {"recovered", r.recovered}, {"max_relative_error", r.max_relative_error}, {"pass_rate", r.pass_rate}};
      } else if (*vs) {
        const auto n = extents(v_n, 6), k = extents(v_k, 9);
        const auto r = verify_stability(n, k, v_draws ? v_draws : 100, seed);
        pass = r.violations == 0;
        rep = {{"check", "stability"}, {"n", n}, {"k", k}, {"pairs", r.pairs}, {"violations", r.violations},
               {"max_ratio", r.max_ratio}};
      } else if (*vr) {
        const auto n = extents(v_n, 6), k = extents(v_k, 9);
        const auto r = verify_robustness(n, k, v_c1, v_c2, v_draws ? v_draws : 100, seed);
        pass = r.violations == 0 && r.c2_zero_max_deviation <= 1e-12;
        rep = {{"check", "robustness"}, {"n", n}, {"k", k}, {"c1", v_c1}, {"c2", v_c2},
               {"instances", r.instances}, {"violations", r.violations}, {"max_ratio", r.max_ratio},
               {"c2_zero_max_deviation", r.c2_zero_max_deviation}};
      } else if (*vl) {
        const std::size_t n = v_n.empty() ? 8 : v_n[0], k = v_k.empty() ? 24 : v_k[0];
        const auto r = verify_lmatrix(n, k, v_draws ? v_draws : 100, seed);
        pass = r.nonsingular_fraction >= 0.99;
        rep = {{"check", "lmatrix"}, {"n", n}, {"k", k}, {"draws", r.draws},
               {"nonsingular_fraction", r.nonsingular_fraction}};
      } else {
        const std::size_t n = v_n.empty() ? 16 : v_n[0], k = v_k.empty() ? 256 : v_k[0];
        const auto r = verify_frip(n, k, v_h, v_draws ? v_draws : 2000, seed);
        pass = r.pass;
        json entries = json::array();
        for (const auto& e : r.entries)
          entries.push_back({{"empirical_mean", e.empirical_mean}, {"predicted", e.predicted},
                             {"std_error", e.std_error}, {"c1", e.c1}, {"within_3_stderr", e.within},
                             {"c1_above_floor", e.c1_above_floor}});
        rep = {{"check", "frip"}, {"n", n}, {"k", k}, {"c1_floor", r.c1_floor}, {"entries", entries}};
      }
      rep["seed"] = seed;
      rep["pass"] = pass;
      write_text(out_path(g, "verify_" + rep["check"].get<std::string>() + ".json"), rep.dump(2) + "\n");
      print_json(rep);
      return pass ? kOk : kCheckFailed;
    }
    if (*mt) {
      const RealArray est = load_array(mt_est), ref = load_array(mt_ref);
      if (!(est.shape == ref.shape)) throw ShapeError("estimate and reference shapes differ");
      double peak = mt_peak;
      if (!(peak > 0.0)) {
        const auto [lo, hi] = std::minmax_element(ref.values.begin(), ref.values.end());
        peak = *hi > *lo ? *hi - *lo : 1.0;
      }
      json rep{{"relative_error", relative_error(est, ref)}, {"psnr", psnr(est, ref, peak)}};
      if (est.shape.rank() == 2) {
        SsimParams p;
        p.dynamic_range = peak;
        const SsimResult s = ssim(est, ref, p);
        rep["ssim"] = s.value;
        rep["ssim_global_fallback"] = s.global_fallback;
      }
      print_json(rep);
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
