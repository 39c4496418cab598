#ifndef MAGLOC_SIGNAL_SYNTH_HPP
#define MAGLOC_SIGNAL_SYNTH_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "magloc/types.hpp"

namespace magloc {

/// One timestamped 3-axis field reading (µT).
struct SensorSample {
  double t = 0.0;
  Vec3 field = Vec3::Zero();
};

struct NoiseModel {
  double gaussian_sigma = 0.1;     // µT per axis
  double quantization_step = 0.6;  // µT, 0 disables
  Vec3 dc_bias{20.0, -5.0, 43.0};  // Earth-like static field, µT
  std::uint64_t rng_seed = 0;

  void validate() const;

  /// Named configurations: "metal", "wood", "acrylic" (identical physics) and
  /// "noiseless" (no Gaussian noise, no quantization, bias kept).
  static NoiseModel preset(std::string_view name);
  static bool is_preset(std::string_view name);
};

/// Sensor placement: `rotation` maps the rig's in-plane field (embedded with
/// a zero third component) into the sensor body frame.
struct SensorPose {
  Vec2 position = Vec2::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

/// Rotation from roll/pitch/yaw in radians (applied yaw, then pitch, then roll).
Eigen::Matrix3d rotation_from_rpy(double roll, double pitch, double yaw);

struct Waypoint {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
};

struct TrajectorySpec {
  enum class Kind { Static, Linear, Circular, Waypoints };

  Kind kind = Kind::Static;
  Vec2 start = Vec2::Zero();  // static point / linear start
  Vec2 end = Vec2::Zero();    // linear end
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double angular_rate = 0.0;  // rad/s
  double phase0 = 0.0;        // rad
  std::vector<Waypoint> waypoints;  // strictly increasing t
  double duration = 1.0;            // s

  static TrajectorySpec fixed(const Vec2& p, double duration);
  static TrajectorySpec linear(const Vec2& from, const Vec2& to, double duration);
  static TrajectorySpec circular(const Vec2& center, double radius, double angular_rate, double phase0,
                                 double duration);
  static TrajectorySpec through(std::vector<Waypoint> points, double duration);

  void validate() const;
};

std::string_view to_string(TrajectorySpec::Kind kind);

/// Position at time t in [0, duration]; DomainError otherwise.
Vec2 trajectory_position(const TrajectorySpec& spec, double t);

/// step·round(v/step), ties away from zero; step = 0 is the identity.
double quantize(double v, double step);

/// Pull-style generator of a synthetic magnetometer stream.
///
/// Sample i is taken at t = i/fs and equals
///   rotation · [Σ field_k(p(t))·sin(2π f_k t + φ_k), 0]ᵀ + bias + noise,
/// quantized per axis. The whole stream is a pure function of the inputs and
/// the noise seed. The constructor checks every trajectory point against the
/// rig's min_valid_distance and the y >= 0 half-plane.
class SignalSynthesizer {
 public:
  SignalSynthesizer(const RigConfig& rig, const std::array<DipoleSource, 2>& sources, TrajectorySpec trajectory,
                    const Eigen::Matrix3d& rotation, const NoiseModel& noise);

  std::size_t size() const { return count_; }
  bool done() const { return index_ >= count_; }
  std::optional<SensorSample> next();

  /// Noise-free, unquantized, bias-free field at time t (body frame).
  Vec3 clean_field(double t) const;
  Vec2 truth(std::size_t index) const;
  double time_of(std::size_t index) const { return static_cast<double>(index) / rig_.sample_rate; }

 private:
  RigConfig rig_;
  std::array<DipoleSource, 2> sources_;
  TrajectorySpec trajectory_;
  Eigen::Matrix3d rotation_;
  NoiseModel noise_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::size_t count_ = 0;
  std::size_t index_ = 0;
};

/// Entire stream, round(duration·fs) samples.
std::vector<SensorSample> synthesize(const RigConfig& rig, const std::array<DipoleSource, 2>& sources,
                                     const TrajectorySpec& trajectory, const Eigen::Matrix3d& rotation,
                                     const NoiseModel& noise);

}  // namespace magloc

#endif  // MAGLOC_SIGNAL_SYNTH_HPP
