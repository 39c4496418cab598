#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "magloc/dsp.hpp"
#include "magloc/field_model.hpp"

using namespace magloc;

namespace {

constexpr double kPi = std::numbers::pi;

NoiseModel silent() {
  NoiseModel n = NoiseModel::preset("noiseless");
  n.dc_bias = Vec3::Zero();
  return n;
}

// 2|X_k|/N by direct summation.
double naive_amplitude(const std::vector<double>& x, std::size_t k) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -2.0 * kPi * double(k * i) / n);
  return 2.0 * std::abs(acc) / n;
}

// Amplitude of a sinusoid at f by least squares against sin and cos.
double fitted_amplitude(const std::vector<double>& y, double f, double fs) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(y.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double ph = 2.0 * kPi * f * double(i) / fs;
    a(Eigen::Index(i), 0) = std::sin(ph);
    a(Eigen::Index(i), 1) = std::cos(ph);
    b(Eigen::Index(i)) = y[i];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  return c.norm();
}

std::vector<double> filter_tone(double f, double seconds, double offset = 0.0) {
  const RigConfig rig;
  BandPassFilter bp(design_bandpass(FilterSpec{}, rig));
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(seconds * 100.0);
  for (std::size_t i = 0; i < n; ++i) out.push_back(bp.step(offset + std::sin(2.0 * kPi * f * double(i) / 100.0)));
  return out;
}

}  // namespace

TEST_CASE("sample buffer evicts the oldest") {
  SampleBuffer buf(50);
  for (int i = 1; i <= 50; ++i) buf.push({i * 0.01, Vec3::Constant(i)});
  CHECK(buf.full());
  CHECK(buf.at(0).x() == 1.0);
  CHECK(buf.at(49).x() == 50.0);
  buf.push({0.51, Vec3::Constant(51)});
  CHECK(buf.size() == 50);
  CHECK(buf.at(0).x() == 2.0);
  CHECK(buf.at(49).x() == 51.0);
  CHECK(buf.window().rows() == 50);
  CHECK(buf.seen() == 51);
  try {
    buf.push({0.3, Vec3::Zero()});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotonicTimestamp);
  }
  CHECK(buf.at(49).x() == 51.0);
}

TEST_CASE("sample buffer window always equals the last N pushes") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<Vec3> all;
  SampleBuffer buf(20);
  for (int i = 0; i < 137; ++i) {
    const Vec3 v(g(rng), g(rng), g(rng));
    all.push_back(v);
    buf.push({i * 0.01, v});
    const std::size_t held = std::min<std::size_t>(all.size(), 20);
    REQUIRE(buf.size() == held);
    for (std::size_t j = 0; j < held; ++j) CHECK(buf.at(j) == all[all.size() - held + j]);
  }
}

TEST_CASE("band-pass design matches reference Butterworth response") {
  const RigConfig rig;
  const FilterDesign d = design_bandpass(FilterSpec{}, rig);
  CHECK(d.sections.size() == 2);
  // Reference values from scipy.signal.butter(2, [15, 35], 'bandpass', fs=100).
  CHECK(d.magnitude_at(20.0) == doctest::Approx(0.980580676).epsilon(1e-8));
  CHECK(d.magnitude_at(30.0) == doctest::Approx(0.980580676).epsilon(1e-8));
  CHECK(d.magnitude_at(45.0) == doctest::Approx(0.0556417559).epsilon(1e-8));
  CHECK(d.magnitude_at(15.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(d.magnitude_at(35.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(d.magnitude_at(0.0) < 1e-8);
  CHECK(d.pole_radius() == doctest::Approx(0.66521).epsilon(1e-4));
  CHECK(d.gain20 == d.magnitude_at(20.0));
  CHECK(d.gain30 == d.magnitude_at(30.0));
}

TEST_CASE("band-pass design rejects bad passbands") {
  const RigConfig rig;
  CHECK_THROWS_AS(design_bandpass({25.0, 35.0, 4}, rig), Error);
  CHECK_THROWS_AS(design_bandpass({15.0, 55.0, 4}, rig), Error);
  CHECK_THROWS_AS(design_bandpass({15.0, 35.0, 3}, rig), Error);
  CHECK_NOTHROW(design_bandpass({15.0, 35.0, 8}, rig));
}

TEST_CASE("band-pass removes a DC step within two seconds") {
  const RigConfig rig;
  BandPassFilter bp(design_bandpass(FilterSpec{}, rig));
  for (int i = 0; i < 100; ++i) CHECK(std::abs(bp.step(10.0)) < 1e-9);
  double last = 0.0;
  for (int i = 0; i < 200; ++i) last = bp.step(50.0);
  CHECK(std::abs(last) < 1e-6);
}

TEST_CASE("band-pass steady state follows the analytic gain") {
  const RigConfig rig;
  const FilterDesign d = design_bandpass(FilterSpec{}, rig);
  for (double f : {20.0, 30.0}) {
    auto y = filter_tone(f, 5.0, 43.0);
    std::vector<double> tail(y.end() - 100, y.end());
    CHECK(fitted_amplitude(tail, f, 100.0) == doctest::Approx(d.magnitude_at(f)).epsilon(0.01));
  }
  auto y45 = filter_tone(45.0, 5.0);
  std::vector<double> tail(y45.end() - 100, y45.end());
  CHECK(fitted_amplitude(tail, 45.0, 100.0) < 0.1);
}

TEST_CASE("bin_amplitude reference values") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  for (int t = 0; t < 10; ++t) {
    const double p = phase(rng);
    std::vector<double> w(50);
    for (std::size_t i = 0; i < 50; ++i) w[i] = 2.0 * std::sin(2.0 * kPi * 20.0 * double(i) / 100.0 + p);
    CHECK(bin_amplitude(w, 20.0, 100.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bin_amplitude(w, 30.0, 100.0) < 1e-12);
  }
  std::vector<double> w20(20);
  for (std::size_t i = 0; i < 20; ++i) w20[i] = std::sin(2.0 * kPi * 30.0 * double(i) / 100.0);
  CHECK(bin_amplitude(w20, 20.0, 100.0) < 1e-12);
  CHECK(bin_amplitude(w20, 30.0, 100.0) == doctest::Approx(1.0).epsilon(1e-12));

  try {
    std::vector<double> odd(50, 0.0);
    bin_amplitude(odd, 21.0, 100.0);
    FAIL("expected BinMisalignment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BinMisalignment);
  }
  CHECK_THROWS_AS(bin_amplitude(std::span<const double>{}, 20.0, 100.0), Error);
}

TEST_CASE("Goertzel agrees with a direct DFT") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 5.0);
  for (std::size_t n : {20u, 50u, 100u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    for (double f : {20.0, 30.0}) {
      const auto k = static_cast<std::size_t>(std::llround(double(n) * f / 100.0));
      CHECK(std::abs(bin_amplitude(x, f, 100.0) - naive_amplitude(x, k)) < 1e-12);
    }
  }
}

TEST_CASE("extract_h on a noiseless static stream recovers both amplitudes") {
  for (std::size_t n : {20u, 50u}) {
    RigConfig rig;
    rig.buffer_len = n;
    const auto src = make_sources(rig);
    for (const Vec2 p : {Vec2(3, 4), Vec2(5, 0.75), Vec2(9, 10)}) {
      const auto s = synthesize(rig, src, TrajectorySpec::fixed(p, 1.0), rotation_from_rpy(0.2, 0.4, -1.0),
                                NoiseModel::preset("noiseless"));
      ToneExtractor ex(rig, FilterSpec{});
      for (const auto& x : s) ex.push(x);
      const SpectralAmplitudes h = ex.extract();
      const double t20 = dipole_field_at(src[0], p).norm();
      const double t30 = dipole_field_at(src[1], p).norm();
      CHECK(std::abs(h.h20 - t20) < 1e-3 * t20);
      CHECK(std::abs(h.h30 - t30) < 1e-3 * t30);
    }
  }
}

TEST_CASE("extract_h edge cases") {
  RigConfig rig;
  const FilterDesign d = design_bandpass(FilterSpec{}, rig);
  SampleBuffer buf(50);
  for (int i = 0; i < 49; ++i) buf.push({i * 0.01, Vec3::Zero()});
  try {
    extract_h(buf, rig, d);
    FAIL("expected BufferNotFull");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BufferNotFull);
  }
  buf.push({0.49, Vec3::Zero()});
  const auto h = extract_h(buf, rig, d);
  CHECK(h.h20 == 0.0);
  CHECK(h.h30 == 0.0);
}

TEST_CASE("tones separate and phase does not matter") {
  RigConfig rig;
  auto src = make_sources(rig);
  const Vec2 p(4, 5);
  src[0].m_eff = 1e-9;  // 20 Hz source effectively off
  const auto s = synthesize(rig, src, TrajectorySpec::fixed(p, 1.0), Eigen::Matrix3d::Identity(), silent());
  ToneExtractor ex(rig, FilterSpec{});
  for (const auto& x : s) ex.push(x);
  const auto h = ex.extract();
  CHECK(h.h20 < 1e-3 * h.h30);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const auto base_src = make_sources(rig);
  ToneExtractor ref(rig, FilterSpec{});
  for (const auto& x : synthesize(rig, base_src, TrajectorySpec::fixed(p, 1.0), Eigen::Matrix3d::Identity(), silent()))
    ref.push(x);
  const auto h_ref = ref.extract();
  for (int i = 0; i < 5; ++i) {
    auto shifted = base_src;
    shifted[0].phase = phase(rng);
    shifted[1].phase = phase(rng);
    ToneExtractor e(rig, FilterSpec{});
    for (const auto& x : synthesize(rig, shifted, TrajectorySpec::fixed(p, 1.0), Eigen::Matrix3d::Identity(), silent()))
      e.push(x);
    const auto hh = e.extract();
    CHECK(hh.h20 == doctest::Approx(h_ref.h20).epsilon(1e-9));
    CHECK(hh.h30 == doctest::Approx(h_ref.h30).epsilon(1e-9));
  }
}

TEST_CASE("rotating the sensor leaves extracted amplitudes unchanged") {
  RigConfig rig;
  const auto src = make_sources(rig);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  auto run = [&](const Eigen::Matrix3d& rot) {
    ToneExtractor e(rig, FilterSpec{});
    for (const auto& x : synthesize(rig, src, TrajectorySpec::fixed({6, 2}, 1.0), rot, silent())) e.push(x);
    return e.extract();
  };
  const auto ref = run(Eigen::Matrix3d::Identity());
  for (int i = 0; i < 10; ++i) {
    const auto h = run(rotation_from_rpy(ang(rng), ang(rng) / 2, ang(rng)));
    CHECK(std::abs(h.h20 - ref.h20) < 1e-6 * ref.h20);
    CHECK(std::abs(h.h30 - ref.h30) < 1e-6 * ref.h30);
  }
}

TEST_CASE("streaming extraction equals stateless recomputation") {
  // Oracle: fresh filters over [first window × (passes + 1), later samples],
  // last N outputs, direct DFT.
  RigConfig rig;
  NoiseModel noise;
  noise.rng_seed = 77;
  const auto s = synthesize(rig, make_sources(rig), TrajectorySpec::linear({2, 3}, {8, 7}, 3.0),
                            Eigen::Matrix3d::Identity(), noise);
  const std::size_t n = rig.buffer_len;
  const FilterDesign d = design_bandpass(FilterSpec{}, rig);
  ToneExtractor ex(rig, FilterSpec{});
  const std::size_t passes = ex.warmup_passes();
  CHECK(passes >= 1);

  for (std::size_t e = 0; e < s.size(); ++e) {
    ex.push(s[e]);
    if (e + 1 < n) {
      CHECK_FALSE(ex.ready());
      continue;
    }
    if ((e - (n - 1)) % 17 != 0) continue;
    double sum20 = 0.0;
    double sum30 = 0.0;
    for (int a = 0; a < 3; ++a) {
      std::vector<double> seq;
      for (std::size_t p = 0; p <= passes; ++p)
        for (std::size_t i = 0; i < n; ++i) seq.push_back(s[i].field[a]);
      for (std::size_t i = n; i <= e; ++i) seq.push_back(s[i].field[a]);
      BandPassFilter bp(d);
      std::vector<double> y;
      for (double v : seq) y.push_back(bp.step(v));
      const std::vector<double> win(y.end() - static_cast<long>(n), y.end());
      sum20 += std::pow(naive_amplitude(win, n * 20 / 100) / d.gain20, 2);
      sum30 += std::pow(naive_amplitude(win, n * 30 / 100) / d.gain30, 2);
    }
    const auto h = ex.extract();
    CHECK(std::abs(h.h20 - std::sqrt(sum20)) < 1e-9 * std::sqrt(sum20));
    CHECK(std::abs(h.h30 - std::sqrt(sum30)) < 1e-9 * std::sqrt(sum30));
  }
}

TEST_CASE("tone extractor rejects out-of-order timestamps without changing state") {
  RigConfig rig;
  ToneExtractor ex(rig, FilterSpec{});
  for (int i = 0; i < 60; ++i) ex.push({i * 0.01, Vec3(std::sin(i), 0, 0)});
  const auto before = ex.extract();
  CHECK_THROWS_AS(ex.push({0.1, Vec3::Zero()}), Error);
  const auto after = ex.extract();
  CHECK(before.h20 == after.h20);
  CHECK(ex.raw().seen() == 60);
}
