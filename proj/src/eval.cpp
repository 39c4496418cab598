#include "magloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace magloc {

Vec2 GridSpec::point(int row, int col) const {
  return origin + Vec2(width * col / (cols - 1), height * row / (rows - 1));
}

std::vector<Vec2> GridSpec::points() const {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out.push_back(point(r, c));
  return out;
}

void GridSpec::validate(const RigConfig& rig) const {
  if (rows < 2 || cols < 2) fail(ErrorCode::ConfigError, "grid needs at least 2 rows and 2 columns");
  if (!(width > 0.0) || !(height > 0.0)) fail(ErrorCode::ConfigError, "grid width/height must be positive");
  for (const Vec2& p : points()) {
    if (p.y() < 0.0) fail(ErrorCode::ConfigError, "grid extends below the y >= 0 half-plane");
    if ((p - rig.anchor20()).norm() < rig.min_valid_distance || (p - rig.anchor30()).norm() < rig.min_valid_distance)
      fail(ErrorCode::ConfigError, "grid point closer than min_valid_distance to an anchor");
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ErrorStats error_stats(std::span<const std::pair<Vec2, Vec2>> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "error_stats needs at least one pair");
  ErrorStats out;
  out.per_point.reserve(pairs.size());
  for (const auto& [truth, est] : pairs) out.per_point.push_back((est - truth).norm());
  const double n = static_cast<double>(out.per_point.size());
  for (double e : out.per_point) out.mae_mean += e;
  out.mae_mean /= n;
  double var = 0.0;
  for (double e : out.per_point) var += (e - out.mae_mean) * (e - out.mae_mean);
  out.mae_std = std::sqrt(var / n);
  return out;
}

std::vector<double> EvalReport::row_means() const {
  std::vector<double> sum(static_cast<std::size_t>(grid.rows), 0.0);
  std::vector<int> count(static_cast<std::size_t>(grid.rows), 0);
  for (const auto& p : points) {
    sum[static_cast<std::size_t>(p.row)] += p.error;
    ++count[static_cast<std::size_t>(p.row)];
  }
  for (std::size_t i = 0; i < sum.size(); ++i)
    if (count[i] > 0) sum[i] /= count[i];
  return sum;
}

RigConfig auto_calibrate(const RigConfig& rig, const NoiseModel& noise, const EvalOptions& options,
                         std::uint64_t seed) {
  NoiseModel cal_noise = noise;
  cal_noise.rng_seed = derive_seed(seed, 0);
  const Vec2 cal_point(rig.baseline_d / 2.0, 0.0);
  const auto samples = synthesize(rig, make_sources(rig, options.sources),
                                  TrajectorySpec::fixed(cal_point, options.calibration_duration), options.rotation,
                                  cal_noise);
  const CalibrationResult cal = calibrate(samples, rig, options.filter, options.calibration);
  RigConfig out = rig;
  out.k20 = cal.k20;
  out.k30 = cal.k30;
  return out;
}

namespace {

PointResult eval_point(const RigConfig& rig, const Vec2& truth, const NoiseModel& noise, const EvalOptions& options,
                       std::uint64_t point_seed) {
  const std::size_t settle = rig.buffer_len;
  const std::size_t stride = static_cast<std::size_t>(std::max(options.stride, 1));
  const std::size_t trials = static_cast<std::size_t>(std::max(options.trials_per_point, 1));
  const std::size_t windows = settle + (trials - 1) * stride + 1;
  const std::size_t samples = rig.buffer_len - 1 + windows;

  NoiseModel point_noise = noise;
  point_noise.rng_seed = point_seed;
  SignalSynthesizer gen(rig, make_sources(rig, options.sources),
                        TrajectorySpec::fixed(truth, static_cast<double>(samples) / rig.sample_rate),
                        options.rotation, point_noise);
  Tracker tracker(rig, options.filter, options.solver, options.deadzone_radius);

  PointResult res;
  res.truth = truth;
  Vec2 sum = Vec2::Zero();
  std::size_t window = 0;
  bool first = true;
  while (auto s = gen.next()) {
    const auto est = tracker.step(*s);
    if (!est) continue;
    if (first) {
      res.cold_iterations = est->iterations;
      first = false;
    } else if (est->warm_started) {
      res.max_warm_iterations = std::max(res.max_warm_iterations, est->iterations);
      res.all_warm_converged = res.all_warm_converged && est->converged;
    }
    const bool record = window >= settle && (window - settle) % stride == 0;
    ++window;
    if (!record) continue;
    if (est->quality == Quality::OutOfRange) {
      ++res.out_of_range;
      continue;
    }
    if (est->quality == Quality::ClampedInfeasible) ++res.clamped;
    sum += est->position;
    ++res.windows;
  }
  if (res.windows > 0) {
    res.mean_estimate = sum / res.windows;
    res.error = (res.mean_estimate - truth).norm();
  } else {
    res.mean_estimate = Vec2::Constant(std::nan(""));
    res.error = std::nan("");
  }
  return res;
}

}  // namespace

EvalReport run_grid_eval(const RigConfig& rig, const GridSpec& grid, const NoiseModel& noise,
                         const EvalOptions& options, std::uint64_t seed) {
  rig.validate();
  noise.validate();
  grid.validate(rig);

  EvalReport report;
  report.seed = seed;
  report.noise = noise;
  report.grid = grid;
  report.rig = rig.calibrated() ? rig : auto_calibrate(rig, noise, options, seed);

  const auto pts = grid.points();
  report.points.resize(pts.size());
  std::vector<std::exception_ptr> errors(pts.size());

  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < pts.size(); i += step) {
      try {
        PointResult r = eval_point(report.rig, pts[i], noise, options, derive_seed(seed, i + 1));
        r.row = static_cast<int>(i) / grid.cols;
        r.col = static_cast<int>(i) % grid.cols;
        report.points[i] = r;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::size_t threads = options.threads > 0 ? static_cast<std::size_t>(options.threads)
                                            : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, pts.size());
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::pair<Vec2, Vec2>> pairs;
  for (const auto& p : report.points)
    if (p.windows > 0) pairs.emplace_back(p.truth, p.mean_estimate);
  if (pairs.empty()) fail(ErrorCode::OutOfRange, "every grid point was out of range");
  const ErrorStats stats = error_stats(pairs);
  report.mae_mean = stats.mae_mean;
  report.mae_std = stats.mae_std;
  return report;
}

TrajectoryReport run_trajectory_eval(const RigConfig& rig, const TrajectorySpec& traj, const NoiseModel& noise,
                                     const EvalOptions& options, std::uint64_t seed) {
  const RigConfig used = rig.calibrated() ? rig : auto_calibrate(rig, noise, options, seed);
  NoiseModel stream_noise = noise;
  stream_noise.rng_seed = derive_seed(seed, 1);
  SignalSynthesizer gen(used, make_sources(used, options.sources), traj, options.rotation, stream_noise);
  Tracker tracker(used, options.filter, options.solver, options.deadzone_radius);

  TrajectoryReport out;
  std::size_t index = 0;
  double sum = 0.0;
  int scored = 0;
  while (auto s = gen.next()) {
    const Vec2 truth = gen.truth(index++);
    const auto est = tracker.step(*s);
    if (!est) continue;
    TrajectoryWindow w{s->t, truth, est->position, 0.0, est->quality};
    if (est->quality == Quality::OutOfRange) {
      ++out.out_of_range;
      w.error = std::nan("");
    } else {
      w.error = (est->position - truth).norm();
      sum += w.error;
      out.max_error = std::max(out.max_error, w.error);
      ++scored;
    }
    out.windows.push_back(w);
  }
  out.mean_error = scored > 0 ? sum / scored : std::nan("");
  out.update_rate = static_cast<double>(out.windows.size()) / traj.duration;
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& os, const EvalReport& report, const std::string& label,
                      const std::vector<std::string>& config_lines, const std::string& config_hash) {
  os << "# config_hash=" << config_hash << " seed=" << report.seed << " preset=" << label << '\n';
  for (const auto& line : config_lines) os << "# config: " << line << '\n';
  os << "# calibrated: k20=" << fmt(report.rig.k20) << " k30=" << fmt(report.rig.k30) << '\n';
  os << "row,col,truth_x,truth_y,est_x,est_y,error_cm,windows,out_of_range\n";
  for (const auto& p : report.points) {
    os << p.row << ',' << p.col << ',' << fmt(p.truth.x()) << ',' << fmt(p.truth.y()) << ','
       << fmt(p.mean_estimate.x()) << ',' << fmt(p.mean_estimate.y()) << ',' << fmt(p.error) << ',' << p.windows
       << ',' << p.out_of_range << '\n';
  }
  os << "# summary: mae_mean_cm=" << fmt(report.mae_mean) << " mae_std_cm=" << fmt(report.mae_std)
     << " points=" << report.points.size() << '\n';
  os << "# surface,mean_error_cm\n";
  char line[128];
  std::snprintf(line, sizeof line, "# %s,%.2f ± %.2f\n", label.c_str(), report.mae_mean, report.mae_std);
  os << line;
}

void write_scatter(std::ostream& os, const EvalReport& report) {
  os << "# truth_x truth_y est_x est_y\n";
  for (const auto& p : report.points)
    os << fmt(p.truth.x()) << ' ' << fmt(p.truth.y()) << ' ' << fmt(p.mean_estimate.x()) << ' '
       << fmt(p.mean_estimate.y()) << '\n';
}

}  // namespace magloc
