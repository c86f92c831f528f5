#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bgpr/core_types.hpp"

namespace bgpr {

/// Shortest text that reads back to the same double (17 significant digits;
/// "nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);
/// Parses the whole string as a double; std::nullopt on any trailing junk.
std::optional<double> parse_double(std::string_view text);

/// One value per line; blank lines and lines starting with '#' are skipped.
/// Throws DataError naming the offending line.
std::vector<double> read_signal_csv(const std::filesystem::path& path);
void write_signal_csv(const std::filesystem::path& path, std::span<const double> values);

/// ASCII PGM (P2, values divided by maxval) or CSV matrix, chosen by file
/// extension. Throws DataError on malformed headers or ragged rows.
RealArray read_image(const std::filesystem::path& path);
/// PGM output clamps to [0, 1] and quantizes to `maxval`; CSV is verbatim.
void write_image(const std::filesystem::path& path, const RealArray& image, int maxval = 255);

struct ExperimentConfig {
  std::vector<Method> methods{Method::BDR};
  /// Sample extents: {n} for 1-D, {n1, n2} for 2-D. Empty when taken from an
  /// input image.
  std::vector<std::size_t> n{100};
  /// Background-to-sample ratios; k_i = lround(ratio * n_i).
  std::vector<double> k_ratios{3.0};
  /// Explicit background extents (k1, k2); override k_ratios when set.
  std::vector<std::size_t> k;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  double eps = 1e-12;
  std::size_t max_iter = 300;
  double beta = 0.9;
  double lambda = 1.0;
  double noise_sigma = 0.0;
  int signal_type = 1;
  double background_mu = 0.0;
  double background_sigma = 1.0;
  /// "corner" (sample at the origin) or "center".
  std::string placement = "corner";
  std::optional<double> stop_relative_error;
  /// CBDR uses the two DC-sign branches when true.
  bool cbdr_dc_branches = true;
  /// wall_ms is written as 0 when false, making result files byte-stable.
  bool record_timing = true;
  /// Named file paths: "signal", "image", ...
  std::map<std::string, std::string> paths;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// JSON document; unknown keys, missing required keys (method, n or n1/n2,
/// k_ratio or k1/k2, trials, seed) and type errors raise ConfigError naming
/// the key. "n" may be omitted when paths.image is given.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig read_config(const std::filesystem::path& path);
/// Canonical JSON echo (all fields, stable key order).
std::string config_to_json(const ExperimentConfig& config);

struct TrialRow {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Method method = Method::BDR;
  std::vector<std::size_t> n;
  std::vector<std::size_t> k;
  std::size_t iterations = 0;
  double relative_error = 0.0;
  double measurement_error = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  bool success = false;
  double wall_ms = 0.0;
};

inline constexpr const char* kResultsHeader =
    "trial,seed,method,n,k,iterations,relative_error,measurement_error,psnr,ssim,success,wall_ms";

/// Results CSV text for `rows` (header plus one line per row).
std::string results_to_csv(const std::vector<TrialRow>& rows);
std::vector<TrialRow> parse_results_csv(const std::string& text);
void write_results(const std::filesystem::path& path, const std::vector<TrialRow>& rows);
std::vector<TrialRow> read_results(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string config_json;
  std::string software_version;
  std::uint64_t seed = 0;
  std::string created_utc;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
};

/// Version string of the library.
std::string software_version();
/// Current UTC time as ISO-8601.
std::string utc_timestamp();

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);
/// Sidecar manifest path for a result file: results.csv -> results.manifest.json.
std::filesystem::path manifest_path_for(const std::filesystem::path& results);

/// Writes a text file, throwing DataError when it cannot be opened.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace bgpr
