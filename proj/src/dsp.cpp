#include "magloc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace magloc {

SampleBuffer::SampleBuffer(std::size_t capacity) : capacity_(capacity), ring_(capacity, Vec3::Zero()) {
  if (capacity == 0) fail(ErrorCode::DomainError, "sample buffer capacity must be positive");
}

void SampleBuffer::push(const SensorSample& s) {
  if (seen_ > 0 && s.t < last_t_) fail(ErrorCode::NonMonotonicTimestamp, "sample timestamp went backwards");
  ring_[head_] = s.field;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++seen_;
  last_t_ = s.t;
}

Vec3 SampleBuffer::at(std::size_t i) const {
  const std::size_t oldest = (head_ + capacity_ - size_) % capacity_;
  return ring_[(oldest + i) % capacity_];
}

std::vector<double> SampleBuffer::axis(int index) const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = at(i)[index];
  return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> SampleBuffer::window() const {
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(static_cast<Eigen::Index>(size_), 3);
  for (std::size_t i = 0; i < size_; ++i) out.row(static_cast<Eigen::Index>(i)) = at(i).transpose();
  return out;
}

std::complex<double> Biquad::response(double omega) const {
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

double FilterDesign::magnitude_at(double hz) const {
  const double omega = 2.0 * std::numbers::pi * hz / sample_rate;
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= s.response(omega);
  return std::abs(h);
}

double FilterDesign::pole_radius() const {
  double r = 0.0;
  for (const auto& s : sections) {
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    r = std::max({r, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  return r;
}

std::size_t FilterDesign::settling_samples(double decay) const {
  const double r = pole_radius();
  if (r <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(decay) / std::log(r)));
}

namespace {

using cplx = std::complex<double>;

cplx bilinear(cplx s) { return (1.0 + s) / (1.0 - s); }

// Section with zeros at z = ±1 and the given pair of analog poles (a
// conjugate pair or two real poles).
Biquad section_from_poles(cplx s1, cplx s2) {
  const cplx z1 = bilinear(s1);
  const cplx z2 = bilinear(s2);
  Biquad q;
  q.b0 = 1.0;
  q.b1 = 0.0;
  q.b2 = -1.0;
  q.a1 = -(z1 + z2).real();
  q.a2 = (z1 * z2).real();
  return q;
}

}  // namespace

FilterDesign design_bandpass(const FilterSpec& spec, const RigConfig& rig) {
  const double fs = rig.sample_rate;
  const double lo_tone = std::min(rig.f20, rig.f30);
  const double hi_tone = std::max(rig.f20, rig.f30);
  if (spec.order < 2 || spec.order % 2 != 0) fail(ErrorCode::ConfigError, "filter.order must be an even integer >= 2");
  if (!(spec.low_hz > 0.0 && spec.low_hz < lo_tone && hi_tone < spec.high_hz && spec.high_hz < fs / 2.0))
    fail(ErrorCode::ConfigError, "filter passband must satisfy 0 < low < f20, f30 < high < fs/2");

  // Prewarped analog band edges for the bilinear map s = (z-1)/(z+1).
  const double w_lo = std::tan(std::numbers::pi * spec.low_hz / fs);
  const double w_hi = std::tan(std::numbers::pi * spec.high_hz / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  const int n = spec.order / 2;  // low-pass prototype order
  FilterDesign design;
  design.spec = spec;
  design.sample_rate = fs;

  // Each prototype pole p maps to the two roots of s² − p·bw·s + w0² = 0.
  auto bp_roots = [&](cplx p) {
    const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0_sq);
    return std::array<cplx, 2>{(p * bw + disc) / 2.0, (p * bw - disc) / 2.0};
  };
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n));
    if (std::abs(p.imag()) < 1e-12) {
      const auto roots = bp_roots(cplx(p.real(), 0.0));
      design.sections.push_back(section_from_poles(roots[0], roots[1]));
    } else if (p.imag() > 0.0) {
      for (const cplx s : bp_roots(p)) design.sections.push_back(section_from_poles(s, std::conj(s)));
    }
  }

  // Unit gain at the geometric center frequency, spread evenly over sections.
  const double f_center = std::atan(std::sqrt(w0_sq)) * fs / std::numbers::pi;
  const double g = std::pow(1.0 / design.magnitude_at(f_center), 1.0 / static_cast<double>(design.sections.size()));
  for (auto& s : design.sections) {
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }

  design.gain20 = design.magnitude_at(rig.f20);
  design.gain30 = design.magnitude_at(rig.f30);
  return design;
}

BandPassFilter::BandPassFilter(const FilterDesign& design)
    : sections_(design.sections), state_(design.sections.size(), {0.0, 0.0}) {}

void BandPassFilter::reset() {
  for (auto& s : state_) s = {0.0, 0.0};
  primed_ = false;
}

double BandPassFilter::step(double x) {
  if (!primed_) {
    // Steady state for a constant input x: the first section's numerator sums
    // to zero, so its output and everything downstream is zero.
    const Biquad& q = sections_.front();
    state_.front() = {(q.b1 + q.b2) * x, q.b2 * x};
    primed_ = true;
  }
  double v = x;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const Biquad& q = sections_[i];
    auto& st = state_[i];
    const double y = q.b0 * v + st[0];
    st[0] = q.b1 * v - q.a1 * y + st[1];
    st[1] = q.b2 * v - q.a2 * y;
    v = y;
  }
  return v;
}

double bin_amplitude(std::span<const double> window, double f, double fs) {
  const std::size_t n = window.size();
  if (n == 0) fail(ErrorCode::EmptyInput, "empty window");
  if (!RigConfig::exact_bin(n, f, fs)) fail(ErrorCode::BinMisalignment, "N·f/fs is not an integer");
  const double k = std::round(static_cast<double>(n) * f / fs);
  const double omega = 2.0 * std::numbers::pi * k / static_cast<double>(n);
  const double coeff = 2.0 * std::cos(omega);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double x : window) {
    const double s0 = x + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double power = std::max(0.0, s1 * s1 + s2 * s2 - coeff * s1 * s2);
  return 2.0 * std::sqrt(power) / static_cast<double>(n);
}

SpectralAmplitudes extract_h(const SampleBuffer& filtered, const RigConfig& rig, const FilterDesign& design) {
  if (!filtered.full()) fail(ErrorCode::BufferNotFull, "sample buffer not yet full");
  double sum20 = 0.0;
  double sum30 = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const std::vector<double> w = filtered.axis(axis);
    const double a20 = bin_amplitude(w, rig.f20, rig.sample_rate) / design.gain20;
    const double a30 = bin_amplitude(w, rig.f30, rig.sample_rate) / design.gain30;
    sum20 += a20 * a20;
    sum30 += a30 * a30;
  }
  return {std::sqrt(sum20), std::sqrt(sum30)};
}

ToneExtractor::ToneExtractor(const RigConfig& rig, const FilterSpec& spec)
    : rig_(rig),
      design_(design_bandpass(spec, rig)),
      filters_{BandPassFilter(design_), BandPassFilter(design_), BandPassFilter(design_)},
      raw_(rig.buffer_len),
      filtered_(rig.buffer_len) {
  const std::size_t n = rig.buffer_len;
  warmup_passes_ = (design_.settling_samples() + n - 1) / n;
}

void ToneExtractor::warm_up() {
  const std::size_t n = raw_.size();
  for (std::size_t pass = 0; pass < warmup_passes_; ++pass)
    for (std::size_t i = 0; i < n; ++i)
      for (int axis = 0; axis < 3; ++axis) filters_[axis].step(raw_.at(i)[axis]);
  // Timestamps come from the raw window; only the values are filtered again.
  const double t_end = raw_.last_time();
  const double dt = 1.0 / rig_.sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    SensorSample out{t_end - dt * static_cast<double>(n - 1 - i), Vec3::Zero()};
    for (int axis = 0; axis < 3; ++axis) out.field[axis] = filters_[axis].step(raw_.at(i)[axis]);
    filtered_.push(out);
  }
}

void ToneExtractor::push(const SensorSample& s) {
  if (raw_.seen() > 0 && s.t < raw_.last_time())
    fail(ErrorCode::NonMonotonicTimestamp, "sample timestamp went backwards");
  const bool was_full = raw_.full();
  raw_.push(s);
  if (!raw_.full()) return;
  if (!was_full) {
    warm_up();
    return;
  }
  SensorSample out{s.t, Vec3::Zero()};
  for (int axis = 0; axis < 3; ++axis) out.field[axis] = filters_[axis].step(s.field[axis]);
  filtered_.push(out);
}

}  // namespace magloc
