#include "magloc/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "magloc/config.hpp"
#include "magloc/csv_io.hpp"
#include "magloc/eval.hpp"
#include "magloc/signal_synth.hpp"
#include "magloc/solver.hpp"

namespace magloc {

std::uint64_t capacity(double throughput_bytes_per_s, double update_rate_hz, double bytes_per_update) {
  if (!(throughput_bytes_per_s > 0.0) || !(update_rate_hz > 0.0) || !(bytes_per_update > 0.0))
    fail(ErrorCode::DomainError, "capacity inputs must be positive");
  return static_cast<std::uint64_t>(std::floor(throughput_bytes_per_s / (update_rate_hz * bytes_per_update)));
}

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output;
  std::vector<std::string> presets;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

AppConfig resolve_config(const CommonArgs& common) {
  AppConfig cfg = common.config_path.empty() ? AppConfig{} : load_config_file(common.config_path);
  apply_env_overrides(cfg, magloc_environment());
  if (common.seed_set) cfg.seed = common.seed;
  return cfg;
}

void apply_preset(AppConfig& cfg, const std::string& preset) {
  const NoiseModel p = NoiseModel::preset(preset);
  cfg.noise.gaussian_sigma = p.gaussian_sigma;
  cfg.noise.quantization_step = p.quantization_step;
}

Vec2 parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) fail(ErrorCode::DomainError, "expected 'x,y', got '" + text + "'");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    fail(ErrorCode::DomainError, "expected 'x,y', got '" + text + "'");
  }
}

std::vector<Waypoint> parse_waypoints(const std::string& text) {
  std::vector<Waypoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    const auto c2 = item.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      fail(ErrorCode::DomainError, "waypoint must be 't:x:y', got '" + item + "'");
    try {
      out.push_back({std::stod(item.substr(0, c1)),
                     Vec2(std::stod(item.substr(c1 + 1, c2 - c1 - 1)), std::stod(item.substr(c2 + 1)))});
    } catch (const std::exception&) {
      fail(ErrorCode::DomainError, "waypoint must be 't:x:y', got '" + item + "'");
    }
  }
  return out;
}

/// Output sink: a file, or the supplied stream for '-'.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
      os_ = file_.get();
    }
  }
  std::ostream& stream() { return *os_; }
  bool is_file() const { return file_ != nullptr; }
  void close() {
    os_->flush();
    if (file_) {
      file_->close();
      if (!*file_) fail(ErrorCode::IoError, "write failed");
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

/// Input source: a file, or the supplied stream for '-'.
class Source {
 public:
  Source(const std::string& path, std::istream& fallback) {
    if (path.empty() || path == "-") {
      is_ = &fallback;
    } else {
      file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
      if (!*file_) fail(ErrorCode::IoError, "cannot open '" + path + "'");
      is_ = file_.get();
    }
  }
  std::istream& stream() { return *is_; }
  bool is_stdin() const { return file_ == nullptr; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* is_ = nullptr;
};

struct SimulateArgs {
  std::string kind = "static";
  std::string point = "5,5";
  std::string start = "2,5";
  std::string end = "8,5";
  std::string center = "5,6";
  double radius = 2.0;
  double omega = 1.0;
  double phase0 = 0.0;
  std::string waypoints;
  double duration = 10.0;
};

int cmd_simulate(const CommonArgs& common, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  AppConfig cfg = resolve_config(common);
  if (!common.presets.empty()) apply_preset(cfg, common.presets.front());
  cfg.validate();

  TrajectorySpec traj;
  if (a.kind == "static") {
    traj = TrajectorySpec::fixed(parse_point(a.point), a.duration);
  } else if (a.kind == "linear") {
    traj = TrajectorySpec::linear(parse_point(a.start), parse_point(a.end), a.duration);
  } else if (a.kind == "circular") {
    traj = TrajectorySpec::circular(parse_point(a.center), a.radius, a.omega, a.phase0, a.duration);
  } else {
    traj = TrajectorySpec::through(parse_waypoints(a.waypoints), a.duration);
  }

  // Construct first so bound violations surface before any file is created.
  SignalSynthesizer gen(cfg.rig, make_sources(cfg.rig, cfg.sources), traj, cfg.sensor.rotation(),
                        cfg.noise_model());
  const std::string path = common.output.empty() ? cfg.paths.output : common.output;
  Sink sink(path, out);
  write_sample_header(sink.stream(), cfg.hash(), cfg.seed);
  while (auto s = gen.next()) write_sample_row(sink.stream(), *s);
  sink.close();
  std::ostream& info = sink.is_file() ? out : err;
  info << "wrote " << gen.size() << " samples (" << static_cast<double>(gen.size()) / cfg.rig.sample_rate
       << " s) to " << (sink.is_file() ? path : "stdout") << '\n';
  return 0;
}

int cmd_calibrate(const CommonArgs& common, const std::string& input, bool force, std::istream& in,
                  std::ostream& out) {
  AppConfig cfg = resolve_config(common);
  cfg.validate();
  const std::string target = !common.output.empty() ? common.output : common.config_path;
  if (target.empty() || target == "-")
    fail(ErrorCode::ConfigError, "calibrate needs --output or --config to know where to write");
  if (std::filesystem::exists(target) && !force)
    fail(ErrorCode::OverwriteRefused, "'" + target + "' exists; pass --force to overwrite");

  Source src(input.empty() ? cfg.paths.input : input, in);
  const auto samples = read_samples(src.stream());
  const CalibrationResult cal = calibrate(samples, cfg.rig, cfg.filter, cfg.calibration);
  cfg.rig.k20 = cal.k20;
  cfg.rig.k30 = cal.k30;

  std::ofstream file(target, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorCode::IoError, "cannot open '" + target + "' for writing");
  char spread[64];
  std::snprintf(spread, sizeof spread, "%.6f", cal.residual_spread);
  file << "# calibrated from " << cal.samples_used << " samples, " << cal.windows
       << " windows, residual_spread=" << spread << '\n'
       << cfg.to_text();
  file.close();
  if (!file) fail(ErrorCode::IoError, "write to '" + target + "' failed");
  out << "k20=" << cfg.get("rig.k20") << " k30=" << cfg.get("rig.k30") << " residual_spread=" << spread
      << " -> " << target << '\n';
  return 0;
}

int cmd_track(const CommonArgs& common, const std::string& input, std::istream& in, std::ostream& out,
              std::ostream& err) {
  AppConfig cfg = resolve_config(common);
  cfg.validate();
  if (!cfg.rig.calibrated()) fail(ErrorCode::Uncalibrated, "config has no rig.k20/rig.k30; run calibrate first");

  Tracker tracker(cfg.rig, cfg.filter, cfg.solver_options(), cfg.deadzone_radius);
  Source src(input.empty() ? cfg.paths.input : input, in);
  Sink sink(common.output.empty() ? cfg.paths.output : common.output, out);
  const bool live = src.is_stdin();

  write_estimate_header(sink.stream(), cfg.hash(), cfg.seed);
  if (live) sink.stream().flush();
  SampleCsvReader reader(src.stream());
  std::size_t rejected = 0;
  std::size_t rows = 0;
  std::size_t reported = 0;
  while (auto s = reader.next()) {
    for (; reported < reader.malformed_lines().size(); ++reported)
      err << "warning: skipping malformed row at line " << reader.malformed_lines()[reported] << '\n';
    std::optional<PositionEstimate> est;
    try {
      est = tracker.step(*s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonMonotonicTimestamp) throw;
      err << "warning: skipping row at line " << reader.line_number() << ": " << e.what() << '\n';
      ++rejected;
      continue;
    }
    if (!est) continue;
    write_estimate_row(sink.stream(), s->t, *est);
    ++rows;
    if (live) sink.stream().flush();
  }
  for (; reported < reader.malformed_lines().size(); ++reported)
    err << "warning: skipping malformed row at line " << reader.malformed_lines()[reported] << '\n';
  sink.close();
  const std::size_t skipped = reader.malformed() + rejected;
  if (skipped > 0 || sink.is_file()) err << rows << " estimates, " << skipped << " rows skipped\n";
  return 0;
}

std::string suffixed(const std::string& path, const std::string& label) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "_" + label + p.extension().string())).string();
}

int cmd_eval_grid(const CommonArgs& common, const std::string& scatter, std::ostream& out, std::ostream& err) {
  AppConfig base = resolve_config(common);
  std::vector<std::string> presets = common.presets;
  if (presets.empty()) presets.push_back("config");
  const std::string output = common.output.empty() ? base.paths.output : common.output;
  const bool to_stdout = output.empty() || output == "-";

  for (const auto& label : presets) {
    AppConfig cfg = base;
    if (label != "config") apply_preset(cfg, label);
    cfg.validate();
    const EvalReport report = run_grid_eval(cfg.rig, cfg.grid, cfg.noise_model(), cfg.eval_options(), cfg.seed);

    const std::string path = presets.size() > 1 && !to_stdout ? suffixed(output, label) : output;
    Sink sink(path, out);
    write_report_csv(sink.stream(), report, label, cfg.lines(), cfg.hash());
    sink.close();
    if (!scatter.empty()) {
      Sink sc(presets.size() > 1 ? suffixed(scatter, label) : scatter, out);
      write_scatter(sc.stream(), report);
      sc.close();
    }
    char line[160];
    std::snprintf(line, sizeof line, "%s: %.4f ± %.4f cm over %zu points\n", label.c_str(), report.mae_mean,
                  report.mae_std, report.points.size());
    (to_stdout ? err : out) << line;
  }
  return 0;
}

int dispatch(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.push_back("magloc");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  app.parse(static_cast<int>(argv.size()), argv.data());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-anchor magnetic field 2D localization: simulate, calibrate, track, evaluate"};
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&](CLI::App* sub, bool presets) {
    sub->add_option("--config", common.config_path, "Config file (key = value)");
    sub->add_option("--output,-o", common.output, "Output path, '-' for stdout");
    auto* seed = sub->add_option("--seed", common.seed, "RNG seed (overrides config)");
    seed->each([&](const std::string&) { common.seed_set = true; });
    if (presets)
      sub->add_option("--preset", common.presets, "Noise preset: metal, wood, acrylic, noiseless")
          ->check(CLI::IsMember({"metal", "wood", "acrylic", "noiseless"}));
  };

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic sample CSV");
  add_common(simulate, true);
  simulate->add_option("--trajectory", sim.kind)->check(CLI::IsMember({"static", "linear", "circular", "waypoints"}));
  simulate->add_option("--point", sim.point, "static point 'x,y' (cm)");
  simulate->add_option("--start", sim.start, "linear start 'x,y'");
  simulate->add_option("--end", sim.end, "linear end 'x,y'");
  simulate->add_option("--center", sim.center, "circle center 'x,y'");
  simulate->add_option("--radius", sim.radius, "circle radius (cm)");
  simulate->add_option("--omega", sim.omega, "angular rate (rad/s)");
  simulate->add_option("--phase0", sim.phase0, "initial angle (rad)");
  simulate->add_option("--waypoints", sim.waypoints, "'t:x:y;t:x:y;...'");
  simulate->add_option("--duration", sim.duration, "seconds");

  std::string input;
  bool force = false;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Estimate K per anchor from a calibration recording");
  add_common(calibrate_cmd, false);
  calibrate_cmd->add_option("--input,-i", input, "Sample CSV, '-' for stdin");
  calibrate_cmd->add_flag("--force", force, "Overwrite an existing output file");

  auto* track = app.add_subcommand("track", "Localize every window of a sample CSV");
  add_common(track, false);
  track->add_option("--input,-i", input, "Sample CSV, '-' for stdin");

  std::string scatter;
  auto* eval_grid = app.add_subcommand("eval-grid", "Grid localization error report");
  add_common(eval_grid, true);
  eval_grid->add_option("--scatter", scatter, "Also write truth/estimate scatter data");

  double throughput = 0.0;
  double rate = 0.0;
  double bytes = 0.0;
  auto* cap = app.add_subcommand("capacity", "Max sensors per link");
  cap->add_option("--throughput", throughput, "bytes/s")->required();
  cap->add_option("--rate", rate, "updates/s per sensor")->required();
  cap->add_option("--bytes", bytes, "bytes per update")->required();

  try {
    dispatch(app, args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, sim, out, err);
    if (calibrate_cmd->parsed()) return cmd_calibrate(common, input, force, in, out);
    if (track->parsed()) return cmd_track(common, input, in, out, err);
    if (eval_grid->parsed()) return cmd_eval_grid(common, scatter, out, err);
    if (cap->parsed()) {
      out << capacity(throughput, rate, bytes) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }
  return 1;
}

}  // namespace magloc
