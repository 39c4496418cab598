#include "magloc/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

extern char** environ;

namespace magloc {

Eigen::Matrix3d SensorOrientation::rotation() const {
  constexpr double deg = std::numbers::pi / 180.0;
  return rotation_from_rpy(roll_deg * deg, pitch_deg * deg, yaw_deg * deg);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    fail(ErrorCode::ConfigError, "key '" + std::string(key) + "': expected a number, got '" + std::string(text) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  Int v{};
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorCode::ConfigError, "key '" + std::string(key) + "': expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::string show(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename Int>
std::string show_int(Int v) {
  return std::to_string(v);
}

struct Entry {
  std::string key;
  std::function<void(AppConfig&, std::string_view)> set;
  std::function<std::string(const AppConfig&)> get;
  std::string doc;
};

#define MAGLOC_DOUBLE(KEY, FIELD, DOC)                                                                \
  Entry {                                                                                             \
    KEY, [](AppConfig& c, std::string_view v) { c.FIELD = parse_double(KEY, v); },                    \
        [](const AppConfig& c) { return show(c.FIELD); }, DOC                                         \
  }
#define MAGLOC_INT(KEY, FIELD, TYPE, DOC)                                                             \
  Entry {                                                                                             \
    KEY, [](AppConfig& c, std::string_view v) { c.FIELD = parse_int<TYPE>(KEY, v); },                 \
        [](const AppConfig& c) { return show_int(c.FIELD); }, DOC                                     \
  }
#define MAGLOC_STRING(KEY, FIELD, DOC)                                                                \
  Entry {                                                                                             \
    KEY, [](AppConfig& c, std::string_view v) { c.FIELD = std::string(trim(v)); },                    \
        [](const AppConfig& c) { return c.FIELD; }, DOC                                               \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      MAGLOC_DOUBLE("rig.baseline_d", rig.baseline_d, "cm between anchor centers"),
      MAGLOC_DOUBLE("rig.f20", rig.f20, "Hz, tone of the anchor at the origin"),
      MAGLOC_DOUBLE("rig.f30", rig.f30, "Hz, tone of the anchor at (D, 0)"),
      MAGLOC_DOUBLE("rig.sample_rate", rig.sample_rate, "Hz"),
      MAGLOC_DOUBLE("rig.k20", rig.k20, "µT²·cm⁶, 0 = uncalibrated"),
      MAGLOC_DOUBLE("rig.k30", rig.k30, "µT²·cm⁶, 0 = uncalibrated"),
      MAGLOC_DOUBLE("rig.min_valid_distance", rig.min_valid_distance, "cm"),
      MAGLOC_INT("rig.buffer_len", rig.buffer_len, std::size_t, "samples (50 or 20)"),
      MAGLOC_DOUBLE("source.m_eff20", sources.m_eff20, "µT·cm³, simulated 20 Hz anchor"),
      MAGLOC_DOUBLE("source.m_eff30", sources.m_eff30, "µT·cm³, simulated 30 Hz anchor"),
      MAGLOC_DOUBLE("source.phase20", sources.phase20, "rad"),
      MAGLOC_DOUBLE("source.phase30", sources.phase30, "rad"),
      MAGLOC_DOUBLE("noise.gaussian_sigma", noise.gaussian_sigma, "µT per axis"),
      MAGLOC_DOUBLE("noise.quantization_step", noise.quantization_step, "µT, 0 disables"),
      MAGLOC_DOUBLE("noise.dc_bias_x", noise.dc_bias.x(), "µT"),
      MAGLOC_DOUBLE("noise.dc_bias_y", noise.dc_bias.y(), "µT"),
      MAGLOC_DOUBLE("noise.dc_bias_z", noise.dc_bias.z(), "µT"),
      MAGLOC_DOUBLE("filter.low_hz", filter.low_hz, "Hz"),
      MAGLOC_DOUBLE("filter.high_hz", filter.high_hz, "Hz"),
      MAGLOC_INT("filter.order", filter.order, int, "even band-pass order"),
      MAGLOC_DOUBLE("grid.origin_x", grid.origin.x(), "cm"),
      MAGLOC_DOUBLE("grid.origin_y", grid.origin.y(), "cm"),
      MAGLOC_DOUBLE("grid.width", grid.width, "cm"),
      MAGLOC_DOUBLE("grid.height", grid.height, "cm"),
      MAGLOC_INT("grid.rows", grid.rows, int, ""),
      MAGLOC_INT("grid.cols", grid.cols, int, ""),
      MAGLOC_INT("solver.max_iterations", solver.max_iterations, int, "warm-start budget"),
      MAGLOC_INT("solver.cold_max_iterations", solver.cold_max_iterations, int, "cold-start budget"),
      MAGLOC_DOUBLE("solver.tolerance", solver.tolerance, "cm"),
      MAGLOC_DOUBLE("solver.noise_floor", noise_floor, "µT, < 0 derives it from the quantization step"),
      MAGLOC_DOUBLE("solver.deadzone_radius", deadzone_radius, "cm, 0 disables"),
      MAGLOC_DOUBLE("calibration.min_duration", calibration.min_duration, "s"),
      MAGLOC_DOUBLE("calibration.max_spread", calibration.max_spread, "relative std"),
      MAGLOC_DOUBLE("sensor.roll_deg", sensor.roll_deg, ""),
      MAGLOC_DOUBLE("sensor.pitch_deg", sensor.pitch_deg, ""),
      MAGLOC_DOUBLE("sensor.yaw_deg", sensor.yaw_deg, ""),
      MAGLOC_INT("eval.trials_per_point", trials_per_point, int, "recorded windows per grid point"),
      MAGLOC_INT("eval.stride", stride, int, "samples between recorded windows"),
      MAGLOC_INT("seed", seed, std::uint64_t, ""),
      MAGLOC_STRING("paths.input", paths.input, "'-' = stdin"),
      MAGLOC_STRING("paths.output", paths.output, "'-' = stdout"),
  };
  return table;
}

#undef MAGLOC_DOUBLE
#undef MAGLOC_INT
#undef MAGLOC_STRING

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries())
    if (e.key == key) return e;
  fail(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void AppConfig::set(std::string_view key, std::string_view value) { find_entry(key).set(*this, value); }

std::string AppConfig::get(std::string_view key) const { return find_entry(key).get(*this); }

std::vector<std::string> AppConfig::lines() const {
  std::vector<std::string> out;
  for (const auto& e : entries()) out.push_back(e.key + " = " + e.get(*this));
  return out;
}

std::string AppConfig::to_text() const {
  std::string out;
  for (const auto& line : lines()) out += line + '\n';
  return out;
}

std::string AppConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void AppConfig::validate() const {
  rig.validate();
  noise.validate();
  design_bandpass(filter, rig);
  grid.validate(rig);
  if (!(sources.m_eff20 > 0.0) || !(sources.m_eff30 > 0.0))
    fail(ErrorCode::ConfigError, "source.m_eff20/m_eff30 must be positive");
  if (solver.max_iterations < 1 || solver.cold_max_iterations < 1)
    fail(ErrorCode::ConfigError, "solver iteration budgets must be >= 1");
  if (!(solver.tolerance > 0.0)) fail(ErrorCode::ConfigError, "solver.tolerance must be positive");
  if (!(deadzone_radius >= 0.0)) fail(ErrorCode::ConfigError, "solver.deadzone_radius must be >= 0");
  if (!(calibration.min_duration > 0.0) || !(calibration.max_spread > 0.0))
    fail(ErrorCode::ConfigError, "calibration limits must be positive");
  if (trials_per_point < 1 || stride < 1) fail(ErrorCode::ConfigError, "eval.trials_per_point/stride must be >= 1");
}

SolverOptions AppConfig::solver_options() const {
  SolverOptions out = solver;
  out.noise_floor = noise_floor >= 0.0 ? noise_floor : default_noise_floor(noise.quantization_step, rig.buffer_len);
  return out;
}

NoiseModel AppConfig::noise_model() const {
  NoiseModel out = noise;
  out.rng_seed = seed;
  return out;
}

EvalOptions AppConfig::eval_options() const {
  EvalOptions out;
  out.sources = sources;
  out.filter = filter;
  out.solver = solver_options();
  out.calibration = calibration;
  out.rotation = sensor.rotation();
  out.deadzone_radius = deadzone_radius;
  out.trials_per_point = trials_per_point;
  out.stride = stride;
  return out;
}

AppConfig parse_config_text(std::string_view text, const std::string& origin) {
  AppConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::ConfigError, origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

AppConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_env_overrides(AppConfig& cfg, const std::map<std::string, std::string>& env) {
  for (const auto& key : config_keys()) {
    std::string name = "MAGLOC_";
    for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (auto it = env.find(name); it != env.end()) {
      try {
        cfg.set(key, it->second);
      } catch (const Error& e) {
        fail(ErrorCode::ConfigError, "environment " + name + ": " + e.what());
      }
    }
  }
}

std::map<std::string, std::string> magloc_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with("MAGLOC_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return out;
}

AppConfig config_from_embedded(std::string_view report_text) {
  constexpr std::string_view prefix = "# config: ";
  std::string collected;
  std::istringstream in{std::string(report_text)};
  std::string line;
  while (std::getline(in, line))
    if (std::string_view(line).starts_with(prefix)) collected += line.substr(prefix.size()) + '\n';
  if (collected.empty()) fail(ErrorCode::ConfigError, "no embedded config lines found");
  return parse_config_text(collected, "<embedded>");
}

}  // namespace magloc
