#ifndef MAGLOC_FIELD_MODEL_HPP
#define MAGLOC_FIELD_MODEL_HPP

// Closed-form in-plane dipole physics.
//
// Conventions: lengths in cm, flux density in µT. A dipole of moment M is
// described by m_eff = M/4π, giving radial and tangential components
//   H_r = 2·m_eff·cosθ / r³,   H_θ = m_eff·sinθ / r³,
// and therefore |H|² = K·r⁻⁶·(3cos²θ + 1) with K = m_eff². Calibration and
// synthesis both rely on this K convention.

#include <cmath>

#include "magloc/errors.hpp"
#include "magloc/types.hpp"

namespace magloc {

/// Field amplitude vector (envelope) of a dipole at `sensor`:
/// m_eff/r³ · (3(â·r̂)r̂ − â).
template <typename Scalar>
Vec2T<Scalar> dipole_field_at(const Vec2T<Scalar>& center, const Vec2T<Scalar>& axis, Scalar m_eff,
                              const Vec2T<Scalar>& sensor) {
  const Vec2T<Scalar> offset = sensor - center;
  const Scalar r = offset.norm();
  if (!(r > Scalar(0))) fail(ErrorCode::DegenerateGeometry, "sensor coincides with the dipole center");
  const Vec2T<Scalar> unit = offset / r;
  return (m_eff / (r * r * r)) * (Scalar(3) * axis.dot(unit) * unit - axis);
}

inline Vec2 dipole_field_at(const DipoleSource& src, const Vec2& sensor) {
  return dipole_field_at<double>(src.position, src.axis, src.m_eff, sensor);
}

/// cos²θ between the dipole axis and the line to `sensor`.
template <typename Scalar>
Scalar cos2_theta(const Vec2T<Scalar>& center, const Vec2T<Scalar>& axis, const Vec2T<Scalar>& sensor) {
  const Vec2T<Scalar> offset = sensor - center;
  const Scalar r2 = offset.squaredNorm();
  if (!(r2 > Scalar(0))) fail(ErrorCode::DegenerateGeometry, "sensor coincides with the dipole center");
  const Scalar c = axis.dot(offset);
  return c * c / r2;
}

/// Squared field magnitude K·r⁻⁶·(3cos²θ + 1).
template <typename Scalar>
Scalar field_magnitude_sq(Scalar k, Scalar r, Scalar cos2theta) {
  if (!(r > Scalar(0))) fail(ErrorCode::DomainError, "radius must be positive");
  if (!(cos2theta >= Scalar(0) && cos2theta <= Scalar(1))) fail(ErrorCode::DomainError, "cos²θ must lie in [0, 1]");
  if (!(k > Scalar(0))) fail(ErrorCode::DomainError, "K must be positive");
  const Scalar r3 = r * r * r;
  return k * (Scalar(3) * cos2theta + Scalar(1)) / (r3 * r3);
}

/// Radius at which the magnitude law yields `h_sq`:
/// r = (K·(3cos²θ + 1)/h²)^(1/6).
///
/// Throws OutOfRange when h_sq does not exceed `noise_floor_sq`; with the
/// default floor of 0 only non-positive h_sq is rejected.
template <typename Scalar>
Scalar invert_radius(Scalar k, Scalar cos2theta, Scalar h_sq, Scalar noise_floor_sq = Scalar(0)) {
  if (!(cos2theta >= Scalar(0) && cos2theta <= Scalar(1))) fail(ErrorCode::DomainError, "cos²θ must lie in [0, 1]");
  if (!(k > Scalar(0))) fail(ErrorCode::DomainError, "K must be positive");
  if (!(h_sq > noise_floor_sq) || !(h_sq > Scalar(0)))
    fail(ErrorCode::OutOfRange, "field magnitude below noise floor");
  using std::cbrt;
  using std::sqrt;
  return cbrt(sqrt(k * (Scalar(3) * cos2theta + Scalar(1)) / h_sq));
}

}  // namespace magloc

#endif  // MAGLOC_FIELD_MODEL_HPP
