#ifndef MAGLOC_TYPES_HPP
#define MAGLOC_TYPES_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include <Eigen/Dense>

#include "magloc/errors.hpp"

namespace magloc {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;

/// In-plane rig coordinates, cm. The 20 Hz anchor sits at the origin and the
/// 30 Hz anchor at (D, 0); the tracked half-plane is y >= 0.
using Vec2 = Vec2T<double>;
/// Per-axis flux density, µT.
using Vec3 = Vec3T<double>;

/// An AC-driven magnetic dipole anchor.
///
/// m_eff is the effective moment M/4π in µT·cm³, so that the calibration
/// constant of the magnitude law is K = m_eff².
struct DipoleSource {
  Vec2 position = Vec2::Zero();
  Vec2 axis = Vec2::UnitY();
  double m_eff = 4000.0;
  double frequency = 20.0;
  double phase = 0.0;

  void validate() const {
    if (!position.allFinite() || !axis.allFinite())
      fail(ErrorCode::DomainError, "dipole position/axis must be finite");
    if (std::abs(axis.norm() - 1.0) > 1e-9) fail(ErrorCode::DomainError, "dipole axis must be a unit vector");
    if (!(m_eff > 0.0)) fail(ErrorCode::DomainError, "dipole m_eff must be positive");
    if (!(frequency > 0.0)) fail(ErrorCode::DomainError, "dipole frequency must be positive");
  }
};

/// Two-anchor geometry plus signal constants.
struct RigConfig {
  double baseline_d = 10.0;  // cm between anchor centers
  double f20 = 20.0;
  double f30 = 30.0;
  double sample_rate = 100.0;
  double k20 = 0.0;  // µT²·cm⁶, 0 = uncalibrated
  double k30 = 0.0;
  double min_valid_distance = 0.5;  // cm
  std::size_t buffer_len = 50;

  Vec2 anchor20() const { return Vec2::Zero(); }
  Vec2 anchor30() const { return {baseline_d, 0.0}; }
  bool calibrated() const { return k20 > 0.0 && k30 > 0.0; }

  /// True when n·f/fs is an integer, i.e. f falls on an exact DFT bin.
  static bool exact_bin(std::size_t n, double f, double fs) {
    const double k = static_cast<double>(n) * f / fs;
    return std::abs(k - std::round(k)) < 1e-9;
  }

  void validate() const {
    if (!(baseline_d > 0.0)) fail(ErrorCode::ConfigError, "rig.baseline_d must be positive");
    if (!(sample_rate > 0.0)) fail(ErrorCode::ConfigError, "rig.sample_rate must be positive");
    if (!(f20 > 0.0) || !(f30 > 0.0)) fail(ErrorCode::ConfigError, "rig frequencies must be positive");
    if (f20 == f30) fail(ErrorCode::ConfigError, "rig.f20 and rig.f30 must differ");
    if (f20 >= sample_rate / 2 || f30 >= sample_rate / 2)
      fail(ErrorCode::ConfigError, "rig frequencies must lie below Nyquist");
    if (buffer_len < 2) fail(ErrorCode::ConfigError, "rig.buffer_len must be at least 2");
    if (!exact_bin(buffer_len, f20, sample_rate) || !exact_bin(buffer_len, f30, sample_rate))
      fail(ErrorCode::ConfigError, "rig.buffer_len must place both tones on exact DFT bins");
    if (k20 < 0.0 || k30 < 0.0) fail(ErrorCode::ConfigError, "rig.k20/k30 must be non-negative");
    if (!(min_valid_distance >= 0.0)) fail(ErrorCode::ConfigError, "rig.min_valid_distance must be >= 0");
  }
};

/// Strength and drive phase for the two anchors used when synthesizing.
struct SourceConfig {
  double m_eff20 = 4000.0;
  double m_eff30 = 4000.0;
  double phase20 = 0.0;
  double phase30 = std::numbers::pi / 3.0;
};

/// Both anchors of a rig, axis +Y, at the rig's frequencies.
inline std::array<DipoleSource, 2> make_sources(const RigConfig& rig, const SourceConfig& src = {}) {
  return {DipoleSource{rig.anchor20(), Vec2::UnitY(), src.m_eff20, rig.f20, src.phase20},
          DipoleSource{rig.anchor30(), Vec2::UnitY(), src.m_eff30, rig.f30, src.phase30}};
}

}  // namespace magloc

#endif  // MAGLOC_TYPES_HPP
