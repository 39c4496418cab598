#include "magloc/signal_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "magloc/field_model.hpp"

namespace magloc {

void NoiseModel::validate() const {
  if (!(gaussian_sigma >= 0.0)) fail(ErrorCode::ConfigError, "noise.gaussian_sigma must be >= 0");
  if (!(quantization_step >= 0.0)) fail(ErrorCode::ConfigError, "noise.quantization_step must be >= 0");
  if (!dc_bias.allFinite()) fail(ErrorCode::ConfigError, "noise.dc_bias must be finite");
}

bool NoiseModel::is_preset(std::string_view name) {
  return name == "metal" || name == "wood" || name == "acrylic" || name == "noiseless";
}

NoiseModel NoiseModel::preset(std::string_view name) {
  if (!is_preset(name)) fail(ErrorCode::ConfigError, "unknown preset '" + std::string(name) + "'");
  NoiseModel model;
  if (name == "noiseless") {
    model.gaussian_sigma = 0.0;
    model.quantization_step = 0.0;
  }
  return model;
}

Eigen::Matrix3d rotation_from_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

std::string_view to_string(TrajectorySpec::Kind kind) {
  switch (kind) {
    case TrajectorySpec::Kind::Static: return "static";
    case TrajectorySpec::Kind::Linear: return "linear";
    case TrajectorySpec::Kind::Circular: return "circular";
    case TrajectorySpec::Kind::Waypoints: return "waypoints";
  }
  return "static";
}

TrajectorySpec TrajectorySpec::fixed(const Vec2& p, double duration) {
  TrajectorySpec spec;
  spec.kind = Kind::Static;
  spec.start = p;
  spec.duration = duration;
  return spec;
}

TrajectorySpec TrajectorySpec::linear(const Vec2& from, const Vec2& to, double duration) {
  TrajectorySpec spec;
  spec.kind = Kind::Linear;
  spec.start = from;
  spec.end = to;
  spec.duration = duration;
  return spec;
}

TrajectorySpec TrajectorySpec::circular(const Vec2& center, double radius, double angular_rate, double phase0,
                                        double duration) {
  TrajectorySpec spec;
  spec.kind = Kind::Circular;
  spec.center = center;
  spec.radius = radius;
  spec.angular_rate = angular_rate;
  spec.phase0 = phase0;
  spec.duration = duration;
  return spec;
}

TrajectorySpec TrajectorySpec::through(std::vector<Waypoint> points, double duration) {
  TrajectorySpec spec;
  spec.kind = Kind::Waypoints;
  spec.waypoints = std::move(points);
  spec.duration = duration;
  return spec;
}

void TrajectorySpec::validate() const {
  if (!(duration > 0.0)) fail(ErrorCode::DomainError, "trajectory duration must be positive");
  if (kind == Kind::Circular && !(radius >= 0.0)) fail(ErrorCode::DomainError, "circle radius must be >= 0");
  if (kind == Kind::Waypoints) {
    if (waypoints.empty()) fail(ErrorCode::DomainError, "waypoint trajectory needs at least one waypoint");
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      if (!(waypoints[i].t > waypoints[i - 1].t))
        fail(ErrorCode::DomainError, "waypoint times must be strictly increasing");
  }
}

Vec2 trajectory_position(const TrajectorySpec& spec, double t) {
  if (!(t >= 0.0 && t <= spec.duration)) fail(ErrorCode::DomainError, "trajectory time outside [0, duration]");
  switch (spec.kind) {
    case TrajectorySpec::Kind::Static:
      return spec.start;
    case TrajectorySpec::Kind::Linear:
      return spec.start + (t / spec.duration) * (spec.end - spec.start);
    case TrajectorySpec::Kind::Circular: {
      const double angle = spec.angular_rate * t + spec.phase0;
      return spec.center + spec.radius * Vec2(std::cos(angle), std::sin(angle));
    }
    case TrajectorySpec::Kind::Waypoints: {
      const auto& w = spec.waypoints;
      if (t <= w.front().t) return w.front().position;
      if (t >= w.back().t) return w.back().position;
      auto hi = std::upper_bound(w.begin(), w.end(), t, [](double v, const Waypoint& p) { return v < p.t; });
      auto lo = std::prev(hi);
      const double u = (t - lo->t) / (hi->t - lo->t);
      return lo->position + u * (hi->position - lo->position);
    }
  }
  return spec.start;
}

double quantize(double v, double step) {
  if (step == 0.0) return v;
  return step * std::round(v / step);
}

SignalSynthesizer::SignalSynthesizer(const RigConfig& rig, const std::array<DipoleSource, 2>& sources,
                                     TrajectorySpec trajectory, const Eigen::Matrix3d& rotation,
                                     const NoiseModel& noise)
    : rig_(rig), sources_(sources), trajectory_(std::move(trajectory)), rotation_(rotation), noise_(noise),
      rng_(noise.rng_seed) {
  rig_.validate();
  noise_.validate();
  trajectory_.validate();
  for (const auto& s : sources_) s.validate();
  if (sources_[0].frequency != rig_.f20 || sources_[1].frequency != rig_.f30)
    fail(ErrorCode::DomainError, "source frequencies must match the rig's f20/f30");
  if (!(rotation_.transpose() * rotation_).isApprox(Eigen::Matrix3d::Identity(), 1e-9))
    fail(ErrorCode::DomainError, "sensor rotation must be orthonormal");

  count_ = static_cast<std::size_t>(std::llround(trajectory_.duration * rig_.sample_rate));
  for (std::size_t i = 0; i < count_; ++i) {
    const Vec2 p = truth(i);
    for (const auto& s : sources_) {
      if ((p - s.position).norm() < rig_.min_valid_distance) {
        std::ostringstream msg;
        msg << "trajectory point (" << p.x() << ", " << p.y() << ") at t=" << time_of(i)
            << " is closer than min_valid_distance to an anchor";
        fail(ErrorCode::TrajectoryOutOfBounds, msg.str());
      }
    }
    if (p.y() < 0.0) fail(ErrorCode::TrajectoryOutOfBounds, "trajectory leaves the y >= 0 interaction half-plane");
  }
}

Vec2 SignalSynthesizer::truth(std::size_t index) const {
  return trajectory_position(trajectory_, std::min(time_of(index), trajectory_.duration));
}

Vec3 SignalSynthesizer::clean_field(double t) const {
  const Vec2 p = trajectory_position(trajectory_, std::min(t, trajectory_.duration));
  Vec2 in_plane = Vec2::Zero();
  for (const auto& s : sources_)
    in_plane += dipole_field_at(s, p) * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
  return rotation_ * Vec3(in_plane.x(), in_plane.y(), 0.0);
}

std::optional<SensorSample> SignalSynthesizer::next() {
  if (done()) return std::nullopt;
  const double t = time_of(index_++);
  Vec3 field = clean_field(t) + noise_.dc_bias;
  for (int axis = 0; axis < 3; ++axis) {
    if (noise_.gaussian_sigma > 0.0) field[axis] += noise_.gaussian_sigma * gauss_(rng_);
    field[axis] = quantize(field[axis], noise_.quantization_step);
  }
  return SensorSample{t, field};
}

std::vector<SensorSample> synthesize(const RigConfig& rig, const std::array<DipoleSource, 2>& sources,
                                     const TrajectorySpec& trajectory, const Eigen::Matrix3d& rotation,
                                     const NoiseModel& noise) {
  SignalSynthesizer gen(rig, sources, trajectory, rotation, noise);
  std::vector<SensorSample> out;
  out.reserve(gen.size());
  while (auto s = gen.next()) out.push_back(*s);
  return out;
}

}  // namespace magloc
