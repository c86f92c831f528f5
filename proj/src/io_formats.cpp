#include "bgpr/io_formats.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "bgpr/errors.hpp"
#include "json.hpp"

namespace bgpr {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<double> read_signal_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto v = parse_double(line);
    if (!v) throw DataError(path.string() + ": line " + std::to_string(lineno) + ": not a number: '" + line + "'");
    values.push_back(*v);
  }
  return values;
}

void write_signal_csv(const std::filesystem::path& path, std::span<const double> values) {
  std::string text;
  for (double v : values) text += format_double(v) + "\n";
  write_text(path, text);
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

// Next whitespace-separated PGM token, skipping '#' comments.
std::optional<std::string> pgm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      if (!tok.empty()) return tok;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  if (!tok.empty()) return tok;
  return std::nullopt;
}

long pgm_int(std::istream& in, const std::string& what, const std::filesystem::path& path) {
  const auto tok = pgm_token(in);
  if (!tok) throw DataError(path.string() + ": truncated PGM (missing " + what + ")");
  long v = 0;
  const auto res = std::from_chars(tok->data(), tok->data() + tok->size(), v);
  if (res.ec != std::errc() || res.ptr != tok->data() + tok->size() || v < 0)
    throw DataError(path.string() + ": bad PGM " + what + " '" + *tok + "'");
  return v;
}

RealArray read_pgm(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  const auto magic = pgm_token(in);
  if (!magic || *magic != "P2") throw DataError(path.string() + ": not an ASCII PGM (expected P2 header)");
  const long width = pgm_int(in, "width", path);
  const long height = pgm_int(in, "height", path);
  const long maxval = pgm_int(in, "maxval", path);
  if (width <= 0 || height <= 0) throw DataError(path.string() + ": PGM dimensions must be positive");
  if (maxval <= 0 || maxval > 65535) throw DataError(path.string() + ": PGM maxval out of range");
  RealArray img(Shape(static_cast<std::size_t>(height), static_cast<std::size_t>(width)));
  for (std::size_t i = 0; i < img.size(); ++i) {
    const long v = pgm_int(in, "pixel " + std::to_string(i), path);
    if (v > maxval) throw DataError(path.string() + ": pixel " + std::to_string(i) + " exceeds maxval");
    img.values[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  if (pgm_token(in)) throw DataError(path.string() + ": trailing data after PGM pixels");
  return img;
}

RealArray read_csv_matrix(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::size_t count = 0, start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const auto v = parse_double(cell);
      if (!v)
        throw DataError(path.string() + ": row " + std::to_string(rows + 1) + " (line " + std::to_string(lineno) +
                        "): not a number: '" + cell + "'");
      values.push_back(*v);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    ++rows;
    if (rows == 1) cols = count;
    else if (count != cols)
      throw DataError(path.string() + ": row " + std::to_string(rows) + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(cols));
  }
  if (rows == 0) throw DataError(path.string() + ": empty matrix");
  return RealArray(Shape(rows, cols), std::move(values));
}

}  // namespace

RealArray read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".csv" || ext == ".txt") return read_csv_matrix(path);
  throw DataError(path.string() + ": unsupported image format '" + ext + "' (use .pgm or .csv)");
}

void write_image(const std::filesystem::path& path, const RealArray& image, int maxval) {
  const std::size_t rows = image.shape.rows(), cols = image.shape.cols();
  std::string text;
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") {
    if (maxval <= 0 || maxval > 65535) throw ConfigError("PGM maxval out of range");
    text = "P2\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n" + std::to_string(maxval) + "\n";
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double v = std::clamp(image.at(i, j), 0.0, 1.0);
        text += (j ? " " : "") + std::to_string(std::lround(v * maxval));
      }
      text += "\n";
    }
  } else if (ext == ".csv" || ext == ".txt") {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) text += (j ? "," : "") + format_double(image.at(i, j));
      text += "\n";
    }
  } else {
    throw DataError(path.string() + ": unsupported image format '" + ext + "'");
  }
  write_text(path, text);
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("method: at least one method is required");
  if (n.size() > 2) throw ConfigError("n: only 1-D and 2-D samples are supported");
  for (std::size_t v : n)
    if (v == 0) throw ConfigError("n: sizes must be positive");
  if (k_ratios.empty() && k.empty()) throw ConfigError("k_ratio: at least one value is required");
  for (double r : k_ratios)
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("k_ratio: values must be finite and nonnegative");
  if (!k.empty() && !n.empty() && k.size() != n.size()) throw ConfigError("k1/k2 must match the sample rank");
  if (trials == 0) throw ConfigError("trials must be positive");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (max_iter == 0) throw ConfigError("max_iter must be at least 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
  if (signal_type < 1 || signal_type > 3) throw ConfigError("signal_type must be 1, 2 or 3");
  if (!(background_sigma > 0.0)) throw ConfigError("background_sigma must be positive");
  if (placement != "corner" && placement != "center") throw ConfigError("placement must be 'corner' or 'center'");
  if (stop_relative_error && !(*stop_relative_error > 0.0)) throw ConfigError("stop_relative_error must be positive");
  if (signal_type == 3 && !paths.count("signal")) throw ConfigError("signal_type 3 needs paths.signal");
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "method", "n", "n1", "n2", "k_ratio", "k1", "k2", "trials", "seed", "eps", "max_iter", "beta", "lambda",
      "noise_sigma", "signal_type", "background_mu", "background_sigma", "placement", "stop_relative_error",
      "cbdr_dc_branches", "record_timing", "paths"};
  return keys;
}

template <typename T>
T get_as(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

std::size_t get_size(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("key '" + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

double get_number(const json& doc, const std::string& key) {
  if (!doc.at(key).is_number()) throw ConfigError("key '" + key + "' must be a number");
  return doc.at(key).get<double>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  if (!doc.contains("method")) throw ConfigError("missing required key 'method'");
  c.methods.clear();
  if (doc["method"].is_string()) {
    c.methods.push_back(parse_method(doc["method"].get<std::string>()));
  } else if (doc["method"].is_array()) {
    for (const auto& m : doc["method"]) {
      if (!m.is_string()) throw ConfigError("key 'method' must hold method names");
      c.methods.push_back(parse_method(m.get<std::string>()));
    }
  } else {
    throw ConfigError("key 'method' has the wrong type");
  }

  const bool has_image = doc.contains("paths") && doc["paths"].is_object() && doc["paths"].contains("image");
  c.n.clear();
  if (doc.contains("n")) {
    if (doc.contains("n1") || doc.contains("n2")) throw ConfigError("give either 'n' or 'n1'/'n2', not both");
    c.n.push_back(get_size(doc, "n"));
  } else if (doc.contains("n1") || doc.contains("n2")) {
    if (!doc.contains("n1") || !doc.contains("n2")) throw ConfigError("missing required key 'n1'/'n2'");
    c.n = {get_size(doc, "n1"), get_size(doc, "n2")};
  } else if (!has_image) {
    throw ConfigError("missing required key 'n'");
  }

  c.k_ratios.clear();
  if (doc.contains("k_ratio")) {
    const json& kr = doc["k_ratio"];
    if (kr.is_number()) c.k_ratios.push_back(kr.get<double>());
    else if (kr.is_array()) {
      for (const auto& v : kr) {
        if (!v.is_number()) throw ConfigError("key 'k_ratio' must hold numbers");
        c.k_ratios.push_back(v.get<double>());
      }
    } else throw ConfigError("key 'k_ratio' has the wrong type");
  }
  if (doc.contains("k1") || doc.contains("k2")) {
    if (!doc.contains("k1")) throw ConfigError("missing required key 'k1'");
    c.k.push_back(get_size(doc, "k1"));
    if (doc.contains("k2")) c.k.push_back(get_size(doc, "k2"));
  }
  if (c.k_ratios.empty() && c.k.empty()) throw ConfigError("missing required key 'k_ratio'");

  if (!doc.contains("trials")) throw ConfigError("missing required key 'trials'");
  c.trials = get_size(doc, "trials");
  if (!doc.contains("seed")) throw ConfigError("missing required key 'seed'");
  if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
    throw ConfigError("key 'seed' must be a nonnegative integer");
  c.seed = doc["seed"].get<std::uint64_t>();

  if (doc.contains("eps")) c.eps = get_number(doc, "eps");
  if (doc.contains("max_iter")) c.max_iter = get_size(doc, "max_iter");
  if (doc.contains("beta")) c.beta = get_number(doc, "beta");
  if (doc.contains("lambda")) c.lambda = get_number(doc, "lambda");
  if (doc.contains("noise_sigma")) c.noise_sigma = get_number(doc, "noise_sigma");
  if (doc.contains("signal_type")) c.signal_type = static_cast<int>(get_size(doc, "signal_type"));
  if (doc.contains("background_mu")) c.background_mu = get_number(doc, "background_mu");
  if (doc.contains("background_sigma")) c.background_sigma = get_number(doc, "background_sigma");
  if (doc.contains("placement")) c.placement = get_as<std::string>(doc, "placement");
  if (doc.contains("stop_relative_error") && !doc["stop_relative_error"].is_null())
    c.stop_relative_error = get_number(doc, "stop_relative_error");
  if (doc.contains("cbdr_dc_branches")) c.cbdr_dc_branches = get_as<bool>(doc, "cbdr_dc_branches");
  if (doc.contains("record_timing")) c.record_timing = get_as<bool>(doc, "record_timing");
  if (doc.contains("paths")) {
    if (!doc["paths"].is_object()) throw ConfigError("key 'paths' must be an object");
    for (const auto& [key, v] : doc["paths"].items()) {
      if (!v.is_string()) throw ConfigError("key 'paths." + key + "' must be a string");
      c.paths[key] = v.get<std::string>();
    }
  }
  c.validate();
  return c;
}

ExperimentConfig read_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string config_to_json(const ExperimentConfig& c) {
  json doc = json::object();
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  doc["method"] = methods.size() == 1 ? methods[0] : methods;
  if (c.n.size() == 1) doc["n"] = c.n[0];
  else if (c.n.size() == 2) {
    doc["n1"] = c.n[0];
    doc["n2"] = c.n[1];
  }
  if (!c.k_ratios.empty()) doc["k_ratio"] = c.k_ratios.size() == 1 ? json(c.k_ratios[0]) : json(c.k_ratios);
  if (!c.k.empty()) doc["k1"] = c.k[0];
  if (c.k.size() > 1) doc["k2"] = c.k[1];
  doc["trials"] = c.trials;
  doc["seed"] = c.seed;
  doc["eps"] = c.eps;
  doc["max_iter"] = c.max_iter;
  doc["beta"] = c.beta;
  doc["lambda"] = c.lambda;
  doc["noise_sigma"] = c.noise_sigma;
  doc["signal_type"] = c.signal_type;
  doc["background_mu"] = c.background_mu;
  doc["background_sigma"] = c.background_sigma;
  doc["placement"] = c.placement;
  doc["stop_relative_error"] = c.stop_relative_error ? json(*c.stop_relative_error) : json(nullptr);
  doc["cbdr_dc_branches"] = c.cbdr_dc_branches;
  doc["record_timing"] = c.record_timing;
  doc["paths"] = c.paths;
  return doc.dump(2);
}

namespace {

std::string format_extents(const std::vector<std::size_t>& e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "x" : "") + std::to_string(e[i]);
  return s;
}

std::vector<std::size_t> parse_extents(const std::string& s, std::size_t line) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto x = s.find('x', start);
    const std::string part = s.substr(start, x == std::string::npos ? std::string::npos : x - start);
    std::size_t v = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || res.ec != std::errc() || res.ptr != part.data() + part.size())
      throw DataError("results line " + std::to_string(line) + ": bad extent '" + s + "'");
    out.push_back(v);
    if (x == std::string::npos) break;
    start = x + 1;
  }
  return out;
}

template <typename T>
T parse_unsigned(const std::string& s, std::size_t line, const char* field) {
  T v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("results line " + std::to_string(line) + ": bad " + field + " '" + s + "'");
  return v;
}

double parse_field(const std::string& s, std::size_t line, const char* field) {
  const auto v = parse_double(s);
  if (!v) throw DataError("results line " + std::to_string(line) + ": bad " + field + " '" + s + "'");
  return *v;
}

}  // namespace

std::string results_to_csv(const std::vector<TrialRow>& rows) {
  std::string text = std::string(kResultsHeader) + "\n";
  for (const auto& r : rows) {
    text += std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + std::string(to_string(r.method)) + "," +
            format_extents(r.n) + "," + format_extents(r.k) + "," + std::to_string(r.iterations) + "," +
            format_double(r.relative_error) + "," + format_double(r.measurement_error) + "," + format_double(r.psnr) +
            "," + format_double(r.ssim) + "," + (r.success ? "1" : "0") + "," + format_double(r.wall_ms) + "\n";
  }
  return text;
}

std::vector<TrialRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw DataError("results file has an unexpected header");
  std::vector<TrialRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto c = line.find(',', start);
      f.push_back(line.substr(start, c == std::string::npos ? std::string::npos : c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (f.size() != 12) throw DataError("results line " + std::to_string(lineno) + ": expected 12 fields");
    TrialRow r;
    r.trial = parse_unsigned<std::size_t>(f[0], lineno, "trial");
    r.seed = parse_unsigned<std::uint64_t>(f[1], lineno, "seed");
    r.method = parse_method(f[2]);
    r.n = parse_extents(f[3], lineno);
    r.k = parse_extents(f[4], lineno);
    r.iterations = parse_unsigned<std::size_t>(f[5], lineno, "iterations");
    r.relative_error = parse_field(f[6], lineno, "relative_error");
    r.measurement_error = parse_field(f[7], lineno, "measurement_error");
    r.psnr = parse_field(f[8], lineno, "psnr");
    r.ssim = parse_field(f[9], lineno, "ssim");
    if (f[10] != "0" && f[10] != "1") throw DataError("results line " + std::to_string(lineno) + ": bad success flag");
    r.success = f[10] == "1";
    r.wall_ms = parse_field(f[11], lineno, "wall_ms");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results(const std::filesystem::path& path, const std::vector<TrialRow>& rows) {
  write_text(path, results_to_csv(rows));
}

std::vector<TrialRow> read_results(const std::filesystem::path& path) { return parse_results_csv(read_text(path)); }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

std::string software_version() { return "bgpr 1.0.0"; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json doc;
  json config;
  try {
    config = json::parse(m.config_json);
  } catch (const json::parse_error&) {
    config = m.config_json;
  }
  doc["config"] = config;
  doc["software_version"] = m.software_version;
  doc["seed"] = m.seed;
  doc["created_utc"] = m.created_utc;
  doc["input_digests"] = m.input_digests;
  doc["output_digests"] = m.output_digests;
  write_text(path, doc.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  RunManifest m;
  try {
    const json doc = json::parse(read_text(path));
    m.config_json = doc.at("config").dump(2);
    m.software_version = doc.at("software_version").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.created_utc = doc.at("created_utc").get<std::string>();
    m.input_digests = doc.at("input_digests").get<std::map<std::string, std::string>>();
    m.output_digests = doc.at("output_digests").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& results) {
  std::filesystem::path p = results;
  p.replace_extension(".manifest.json");
  return p;
}

}  // namespace bgpr
