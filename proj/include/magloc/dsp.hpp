#ifndef MAGLOC_DSP_HPP
#define MAGLOC_DSP_HPP

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "magloc/signal_synth.hpp"
#include "magloc/types.hpp"

namespace magloc {

/// Fixed-capacity FIFO of 3-axis samples. Once full, every push evicts the
/// oldest sample.
class SampleBuffer {
 public:
  explicit SampleBuffer(std::size_t capacity);

  /// Throws NonMonotonicTimestamp if s.t is earlier than the last push.
  void push(const SensorSample& s);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t seen() const { return seen_; }
  bool full() const { return size_ == capacity_; }
  double last_time() const { return last_t_; }

  /// Chronological copy of one axis, oldest first.
  std::vector<double> axis(int index) const;
  /// Chronological snapshot, one row per sample.
  Eigen::Matrix<double, Eigen::Dynamic, 3> window() const;
  /// The i-th oldest sample still held.
  Vec3 at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Vec3> ring_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  std::size_t seen_ = 0;
  double last_t_ = 0.0;
};

inline void push_sample(SampleBuffer& buf, const SensorSample& s) { buf.push(s); }

/// Band-pass parameters. `order` is the overall (even) filter order.
struct FilterSpec {
  double low_hz = 15.0;
  double high_hz = 35.0;
  int order = 4;
};

/// Normalized second-order section, transposed direct form II:
/// H(z) = (b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(double omega) const;
};

/// Butterworth band-pass realized as order/2 cascaded biquads, plus the
/// magnitude response at the two tone frequencies.
struct FilterDesign {
  FilterSpec spec;
  double sample_rate = 100.0;
  std::vector<Biquad> sections;
  double gain20 = 1.0;
  double gain30 = 1.0;

  double magnitude_at(double hz) const;
  /// Largest pole magnitude over all sections.
  double pole_radius() const;
  /// Samples for the free response to decay by `decay`.
  std::size_t settling_samples(double decay = 1e-12) const;
  double gain_at(double hz, const RigConfig& rig) const { return hz == rig.f20 ? gain20 : gain30; }
};

/// Checks low < min(f20,f30) < max(f20,f30) < high < fs/2 and an even order.
FilterDesign design_bandpass(const FilterSpec& spec, const RigConfig& rig);

/// Causal streaming band-pass for one axis. The first sample primes the
/// state so a constant input yields zero output from the start; the state
/// then persists across windows.
class BandPassFilter {
 public:
  explicit BandPassFilter(const FilterDesign& design);

  double step(double x);
  void reset();

 private:
  std::vector<Biquad> sections_;
  std::vector<std::array<double, 2>> state_;
  bool primed_ = false;
};

inline double bandpass_step(BandPassFilter& state, double x) { return state.step(x); }

/// Tone amplitude 2·|X_k|/N of bin k = N·f/fs (rectangular window), computed
/// with a single-bin Goertzel recursion. Throws BinMisalignment when k is not
/// an integer.
double bin_amplitude(std::span<const double> window, double f, double fs);

/// Total field amplitude per tone across the three axes, µT.
struct SpectralAmplitudes {
  double h20 = 0.0;
  double h30 = 0.0;
};

/// Amplitudes from a buffer of already band-passed samples; each axis
/// amplitude is divided by the filter gain at its tone before the axes are
/// combined. Throws BufferNotFull before the buffer fills.
SpectralAmplitudes extract_h(const SampleBuffer& filtered, const RigConfig& rig, const FilterDesign& design);

/// Streaming front end: raw sample buffer, per-axis band-pass, and a buffer
/// of filtered samples. One producer calls push(); extract() reads the
/// current window.
///
/// Warm-up: when the raw buffer fills for the first time, the filters are
/// run over that first window repeated as a periodic extension until their
/// free response has decayed, and the last repetition becomes the first
/// filtered window. Exact-bin tones are periodic in the window, so the first
/// window is already in steady state. From then on every sample is filtered
/// once, continuously.
class ToneExtractor {
 public:
  ToneExtractor(const RigConfig& rig, const FilterSpec& spec);

  void push(const SensorSample& s);
  bool ready() const { return filtered_.full(); }
  SpectralAmplitudes extract() const { return extract_h(filtered_, rig_, design_); }

  const SampleBuffer& raw() const { return raw_; }
  const SampleBuffer& buffer() const { return filtered_; }
  const FilterDesign& design() const { return design_; }
  /// Repetitions of the first window run before it is kept.
  std::size_t warmup_passes() const { return warmup_passes_; }

 private:
  void warm_up();

  RigConfig rig_;
  FilterDesign design_;
  std::array<BandPassFilter, 3> filters_;
  SampleBuffer raw_;
  SampleBuffer filtered_;
  std::size_t warmup_passes_ = 0;
};

}  // namespace magloc

#endif  // MAGLOC_DSP_HPP
