#ifndef MAGLOC_EVAL_HPP
#define MAGLOC_EVAL_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "magloc/dsp.hpp"
#include "magloc/signal_synth.hpp"
#include "magloc/solver.hpp"
#include "magloc/types.hpp"

namespace magloc {

/// Rectangular grid of test points. Row 0 is the row nearest the bar.
struct GridSpec {
  Vec2 origin{0.0, 0.75};
  double width = 10.0;
  double height = 10.0;
  int rows = 5;
  int cols = 5;

  Vec2 point(int row, int col) const;
  std::vector<Vec2> points() const;
  void validate(const RigConfig& rig) const;
};

/// Everything besides rig, grid, noise and seed that shapes an evaluation.
struct EvalOptions {
  SourceConfig sources;
  FilterSpec filter;
  SolverOptions solver;
  CalibrationOptions calibration;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double deadzone_radius = 0.0;
  int trials_per_point = 10;  // recorded windows per point
  int stride = 10;            // samples between recorded windows
  int threads = 0;            // 0 = hardware concurrency
  double calibration_duration = 3.0;  // s, used when the rig is uncalibrated
};

struct ErrorStats {
  double mae_mean = 0.0;
  double mae_std = 0.0;
  std::vector<double> per_point;
};

/// Euclidean error per (truth, estimate) pair with population mean and std.
/// Throws EmptyInput on an empty list.
ErrorStats error_stats(std::span<const std::pair<Vec2, Vec2>> pairs);

struct PointResult {
  int row = 0;
  int col = 0;
  Vec2 truth = Vec2::Zero();
  Vec2 mean_estimate = Vec2::Zero();
  double error = 0.0;  // |mean_estimate − truth|, cm
  int windows = 0;     // recorded windows that produced a position
  int out_of_range = 0;
  int clamped = 0;
  int cold_iterations = 0;      // iterations of the first (cold) solve
  int max_warm_iterations = 0;  // worst warm-started solve after the first
  bool all_warm_converged = true;
};

struct EvalReport {
  std::vector<PointResult> points;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  std::uint64_t seed = 0;
  RigConfig rig;  // as used, K filled in
  NoiseModel noise;
  GridSpec grid;

  /// Mean point error per grid row.
  std::vector<double> row_means() const;
};

/// Calibrates a copy of `rig` from a synthetic dwell at (D/2, 0).
RigConfig auto_calibrate(const RigConfig& rig, const NoiseModel& noise, const EvalOptions& options,
                         std::uint64_t seed);

/// Per grid point: synthesize a static dwell, stream it through the tracker,
/// record `trials_per_point` windows spaced `stride` samples apart after a
/// one-buffer settling period, and score the mean estimate. Points run
/// concurrently; the report depends only on the inputs and the seed.
EvalReport run_grid_eval(const RigConfig& rig, const GridSpec& grid, const NoiseModel& noise,
                         const EvalOptions& options, std::uint64_t seed);

struct TrajectoryWindow {
  double t = 0.0;
  Vec2 truth = Vec2::Zero();
  Vec2 estimate = Vec2::Zero();
  double error = 0.0;
  Quality quality = Quality::Ok;
};

struct TrajectoryReport {
  std::vector<TrajectoryWindow> windows;
  double mean_error = 0.0;
  double max_error = 0.0;
  double update_rate = 0.0;  // estimates per second of stream
  int out_of_range = 0;
};

/// Replays a synthetic stream sample by sample and localizes after every
/// sample once the buffer is full; errors are against the ground truth at
/// each window's end time.
TrajectoryReport run_trajectory_eval(const RigConfig& rig, const TrajectorySpec& traj, const NoiseModel& noise,
                                     const EvalOptions& options, std::uint64_t seed);

/// Per-point CSV with config echo header and aggregate footer.
void write_report_csv(std::ostream& os, const EvalReport& report, const std::string& label,
                      const std::vector<std::string>& config_lines, const std::string& config_hash);

/// Whitespace-separated truth/estimate columns for scatter plots.
void write_scatter(std::ostream& os, const EvalReport& report);

/// Deterministic per-stream seed derived from a base seed and an index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace magloc

#endif  // MAGLOC_EVAL_HPP
