#ifndef MAGLOC_SOLVER_HPP
#define MAGLOC_SOLVER_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string_view>

#include "magloc/dsp.hpp"
#include "magloc/errors.hpp"
#include "magloc/signal_synth.hpp"
#include "magloc/types.hpp"

namespace magloc {

template <typename Scalar>
struct CircleIntersection {
  Vec2T<Scalar> point;
  bool feasible = true;
};

/// Intersection of the circle of radius r20 around (0,0) with the circle of
/// radius r30 around (d,0), keeping the y >= 0 root. When the circles do not
/// meet, y is clamped to 0 and `feasible` is false.
template <typename Scalar>
CircleIntersection<Scalar> circle_intersect(Scalar r20, Scalar r30, Scalar d) {
  if (!(r20 > Scalar(0) && r30 > Scalar(0) && d > Scalar(0)))
    fail(ErrorCode::DomainError, "radii and baseline must be positive");
  const Scalar x = (r20 * r20 - r30 * r30 + d * d) / (Scalar(2) * d);
  const Scalar y_sq = r20 * r20 - x * x;
  if (y_sq >= Scalar(0)) {
    using std::sqrt;
    return {Vec2T<Scalar>(x, sqrt(y_sq)), true};
  }
  return {Vec2T<Scalar>(x, Scalar(0)), false};
}

template <typename Scalar>
struct Cos2Pair {
  Scalar c20;
  Scalar c30;
};

/// cos²θ for both anchors with their axes along +y:
/// y²/(x² + y²) and y²/((d−x)² + y²).
template <typename Scalar>
Cos2Pair<Scalar> update_cos2(Scalar x, Scalar y, Scalar d) {
  const Scalar y2 = y * y;
  const Scalar n20 = x * x + y2;
  const Scalar n30 = (d - x) * (d - x) + y2;
  if (!(n20 > Scalar(0)) || !(n30 > Scalar(0)))
    fail(ErrorCode::DegenerateGeometry, "iterate landed on an anchor center");
  return {y2 / n20, y2 / n30};
}

enum class Quality { Ok, ClampedInfeasible, OutOfRange };

std::string_view to_string(Quality q);

struct PositionEstimate {
  Vec2 position = Vec2::Constant(std::nan(""));  // after dead-zone
  Vec2 raw_position = Vec2::Constant(std::nan(""));
  double r20 = 0.0;
  double r30 = 0.0;
  double cos2_20 = 1.0;
  double cos2_30 = 1.0;
  int iterations = 0;
  bool converged = false;
  bool warm_started = false;
  bool near_field = false;  // an anchor radius fell below min_valid_distance
  Quality quality = Quality::OutOfRange;
};

struct SolverOptions {
  int max_iterations = 5;        // budget for warm-started solves
  int cold_max_iterations = 200;  // budget when no converged prior state exists
  double tolerance = 1e-6;       // cm, position change between iterates
  double noise_floor = 0.0;      // µT total amplitude; at or below -> OutOfRange
};

/// Default amplitude floor: 3× the quantization-induced amplitude noise of a
/// three-axis, N-sample exact-bin estimate, 3·√3·(step/√12)·√(2/N).
double default_noise_floor(double quantization_step, std::size_t buffer_len);

/// Per-sensor solver memory: warm-start cos²θ values and dead-zone output.
struct SolverState {
  double warm_cos2_20 = 1.0;
  double warm_cos2_30 = 1.0;
  bool warm = false;  // warm values come from a converged solve
  std::optional<Vec2> last_output;
  double deadzone_radius = 0.0;

  void reset() {
    warm_cos2_20 = warm_cos2_30 = 1.0;
    warm = false;
    last_output.reset();
  }
};

/// Joint (r, θ) fixed-point estimation for both anchors followed by two-circle
/// trilateration. Starts from cos²θ = 1 (θ = 0) or the state's warm values,
/// iterates invert_radius -> circle_intersect -> update_cos2 until successive
/// positions differ by less than `tolerance` or the iteration budget runs out,
/// then applies the dead-zone and stores the warm values.
///
/// Amplitudes at or below the noise floor yield quality OutOfRange with no
/// position update. Throws Uncalibrated if the rig has no K values.
PositionEstimate locate(const SpectralAmplitudes& h, const RigConfig& rig, SolverState& state,
                        const SolverOptions& options = {});

/// Returns last_output while the move stays inside the dead-zone radius,
/// otherwise new_pos (which becomes the new last_output).
Vec2 apply_deadzone(SolverState& state, const Vec2& new_pos);

struct CalibrationOptions {
  double min_duration = 2.0;  // s
  double max_spread = 0.2;    // relative std of per-window K
};

struct CalibrationResult {
  double k20 = 0.0;
  double k30 = 0.0;
  std::size_t samples_used = 0;
  std::size_t windows = 0;
  double residual_spread = 0.0;  // max over both anchors
};

/// Estimates K per anchor from a stream recorded at the calibration point
/// (D/2, 0), where r = D/2 and cos²θ = 0: K = h̄²·(D/2)⁶ with h̄ the mean
/// amplitude over all full windows.
CalibrationResult calibrate(std::span<const SensorSample> samples, const RigConfig& rig, const FilterSpec& filter,
                            const CalibrationOptions& options = {});

/// Streaming per-sample pipeline: band-pass + buffer + two-bin extraction +
/// locate. step() returns an estimate once the buffer has filled.
class Tracker {
 public:
  Tracker(const RigConfig& rig, const FilterSpec& filter, const SolverOptions& options, double deadzone_radius = 0.0);

  std::optional<PositionEstimate> step(const SensorSample& s);

  const SolverState& state() const { return state_; }
  const ToneExtractor& extractor() const { return extractor_; }

 private:
  RigConfig rig_;
  SolverOptions options_;
  ToneExtractor extractor_;
  SolverState state_;
};

}  // namespace magloc

#endif  // MAGLOC_SOLVER_HPP
