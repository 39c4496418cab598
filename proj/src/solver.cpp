#include "magloc/solver.hpp"

#include <cmath>
#include <vector>

#include "magloc/field_model.hpp"

namespace magloc {

std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::Ok: return "ok";
    case Quality::ClampedInfeasible: return "clamped";
    case Quality::OutOfRange: return "out_of_range";
  }
  return "out_of_range";
}

double default_noise_floor(double quantization_step, std::size_t buffer_len) {
  if (quantization_step <= 0.0 || buffer_len == 0) return 0.0;
  const double per_sample = quantization_step / std::sqrt(12.0);
  const double per_axis = per_sample * std::sqrt(2.0 / static_cast<double>(buffer_len));
  return 3.0 * std::sqrt(3.0) * per_axis;
}

Vec2 apply_deadzone(SolverState& state, const Vec2& new_pos) {
  if (state.deadzone_radius > 0.0 && state.last_output &&
      (new_pos - *state.last_output).norm() < state.deadzone_radius)
    return *state.last_output;
  state.last_output = new_pos;
  return new_pos;
}

PositionEstimate locate(const SpectralAmplitudes& h, const RigConfig& rig, SolverState& state,
                        const SolverOptions& options) {
  if (!rig.calibrated()) fail(ErrorCode::Uncalibrated, "rig has no calibrated K values");
  PositionEstimate est;
  if (state.last_output) est.position = *state.last_output;

  const double floor = std::max(options.noise_floor, 0.0);
  if (!(h.h20 > floor) || !(h.h30 > floor)) {
    est.quality = Quality::OutOfRange;
    state.warm = false;
    return est;
  }

  const double d = rig.baseline_d;
  const double h20_sq = h.h20 * h.h20;
  const double h30_sq = h.h30 * h.h30;
  est.warm_started = state.warm;
  double c20 = state.warm ? state.warm_cos2_20 : 1.0;
  double c30 = state.warm ? state.warm_cos2_30 : 1.0;
  const int budget = state.warm ? options.max_iterations : options.cold_max_iterations;

  // The iteration contracts linearly, so the distance left to the fixed point
  // is about step·ρ/(1−ρ) with ρ the ratio of successive steps. Stop once the
  // step is under tolerance and the remainder under half of it, so any two
  // converged solves of one input agree within tolerance.
  const double tol = options.tolerance;
  Vec2 prev = Vec2::Constant(std::nan(""));
  double prev_step = std::nan("");
  CircleIntersection<double> ci;
  for (int it = 1; it <= budget; ++it) {
    est.r20 = invert_radius(rig.k20, c20, h20_sq);
    est.r30 = invert_radius(rig.k30, c30, h30_sq);
    ci = circle_intersect(est.r20, est.r30, d);
    const auto cos2 = update_cos2(ci.point.x(), ci.point.y(), d);
    c20 = cos2.c20;
    c30 = cos2.c30;
    est.iterations = it;
    bool settled = false;
    if (it > 1) {
      const double step = (ci.point - prev).norm();
      const double rho = step / prev_step;
      settled = step < tol && (step < 1e-3 * tol || (rho < 1.0 && step * rho / (1.0 - rho) < 0.5 * tol));
      prev_step = step;
    }
    prev = ci.point;
    if (settled) {
      est.converged = true;
      break;
    }
  }

  est.cos2_20 = c20;
  est.cos2_30 = c30;
  est.raw_position = ci.point;
  est.quality = ci.feasible ? Quality::Ok : Quality::ClampedInfeasible;
  est.near_field = est.r20 < rig.min_valid_distance || est.r30 < rig.min_valid_distance;
  est.position = apply_deadzone(state, ci.point);

  state.warm_cos2_20 = c20;
  state.warm_cos2_30 = c30;
  state.warm = state.warm || est.converged;
  return est;
}

CalibrationResult calibrate(std::span<const SensorSample> samples, const RigConfig& rig, const FilterSpec& filter,
                            const CalibrationOptions& options) {
  rig.validate();
  const double duration = static_cast<double>(samples.size()) / rig.sample_rate;
  if (duration + 1e-9 < options.min_duration)
    fail(ErrorCode::InsufficientSamples, "calibration needs at least " + std::to_string(options.min_duration) + " s");

  ToneExtractor extractor(rig, filter);
  std::vector<double> h20;
  std::vector<double> h30;
  for (const auto& s : samples) {
    extractor.push(s);
    if (extractor.ready()) {
      const auto h = extractor.extract();
      h20.push_back(h.h20);
      h30.push_back(h.h30);
    }
  }
  if (h20.empty()) fail(ErrorCode::InsufficientSamples, "no full window in calibration stream");

  const double half_d = rig.baseline_d / 2.0;
  const double r6 = std::pow(half_d, 6.0);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto spread = [&](const std::vector<double>& h) {
    std::vector<double> k(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) k[i] = h[i] * h[i] * r6;
    const double m = mean(k);
    double var = 0.0;
    for (double x : k) var += (x - m) * (x - m);
    return std::sqrt(var / static_cast<double>(k.size())) / m;
  };

  const double h20_mean = mean(h20);
  const double h30_mean = mean(h30);
  if (!(h20_mean > 0.0) || !(h30_mean > 0.0))
    fail(ErrorCode::InsufficientSamples, "no tone energy in calibration stream");

  CalibrationResult out;
  out.k20 = h20_mean * h20_mean * r6;
  out.k30 = h30_mean * h30_mean * r6;
  out.samples_used = samples.size();
  out.windows = h20.size();
  out.residual_spread = std::max(spread(h20), spread(h30));
  if (!(out.residual_spread <= options.max_spread))
    fail(ErrorCode::ExcessiveSpread,
         "per-window K varies by " + std::to_string(out.residual_spread * 100.0) + "% (sensor moved?)");
  return out;
}

Tracker::Tracker(const RigConfig& rig, const FilterSpec& filter, const SolverOptions& options, double deadzone_radius)
    : rig_(rig), options_(options), extractor_(rig, filter) {
  if (!rig_.calibrated()) fail(ErrorCode::Uncalibrated, "rig has no calibrated K values");
  state_.deadzone_radius = deadzone_radius;
}

std::optional<PositionEstimate> Tracker::step(const SensorSample& s) {
  extractor_.push(s);
  if (!extractor_.ready()) return std::nullopt;
  return locate(extractor_.extract(), rig_, state_, options_);
}

}  // namespace magloc
