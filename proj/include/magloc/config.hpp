#ifndef MAGLOC_CONFIG_HPP
#define MAGLOC_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "magloc/dsp.hpp"
#include "magloc/eval.hpp"
#include "magloc/signal_synth.hpp"
#include "magloc/solver.hpp"
#include "magloc/types.hpp"

namespace magloc {

/// Sensor mounting, degrees.
struct SensorOrientation {
  double roll_deg = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;

  Eigen::Matrix3d rotation() const;
};

struct Paths {
  std::string input = "-";
  std::string output = "-";
};

/// Complete application configuration. Every field has a default; a config
/// file only needs the keys it changes.
///
/// File format: one `key = value` per line, dotted section keys
/// (`rig.baseline_d = 10`), `#` starts a comment. Unknown keys are rejected.
/// Environment variables `MAGLOC_<KEY>` override file values, with the key
/// upper-cased and dots replaced by underscores (`MAGLOC_RIG_K20`).
struct AppConfig {
  RigConfig rig;
  SourceConfig sources;
  NoiseModel noise;
  FilterSpec filter;
  GridSpec grid;
  SolverOptions solver;
  CalibrationOptions calibration;
  SensorOrientation sensor;
  double deadzone_radius = 0.0;
  double noise_floor = -1.0;  // < 0: derive from the quantization step
  int trials_per_point = 10;
  int stride = 10;
  std::uint64_t seed = 1;
  Paths paths;

  void validate() const;

  /// Solver options with the noise floor resolved.
  SolverOptions solver_options() const;
  EvalOptions eval_options() const;
  NoiseModel noise_model() const;  // noise with rng_seed = seed

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Canonical `key = value` lines in documented key order.
  std::vector<std::string> lines() const;
  std::string to_text() const;
  /// FNV-1a 64 of to_text(), as 16 hex digits.
  std::string hash() const;
};

/// Ordered list of every recognized key.
const std::vector<std::string>& config_keys();

AppConfig parse_config_text(std::string_view text, const std::string& origin = "<text>");
AppConfig load_config_file(const std::string& path);

/// Applies MAGLOC_* overrides from `env` (name -> value).
void apply_env_overrides(AppConfig& cfg, const std::map<std::string, std::string>& env);
/// Snapshot of the process environment restricted to MAGLOC_* names.
std::map<std::string, std::string> magloc_environment();

/// Config lines embedded in a report as `# config: key = value`.
AppConfig config_from_embedded(std::string_view report_text);

}  // namespace magloc

#endif  // MAGLOC_CONFIG_HPP
