#include <doctest.h>

#include <cmath>
#include <random>

#include "magloc/field_model.hpp"
#include "magloc/solver.hpp"

using namespace magloc;

namespace {

RigConfig calibrated_rig() {
  RigConfig rig;
  rig.k20 = 4000.0 * 4000.0;
  rig.k30 = 4000.0 * 4000.0;
  return rig;
}

SpectralAmplitudes exact_h(const RigConfig& rig, const Vec2& p) {
  const auto src = make_sources(rig);
  return {dipole_field_at(src[0], p).norm(), dipole_field_at(src[1], p).norm()};
}

NoiseModel silent() {
  NoiseModel n = NoiseModel::preset("noiseless");
  n.dc_bias = Vec3::Zero();
  return n;
}

std::vector<SensorSample> dwell(const RigConfig& rig, const SourceConfig& sc, double seconds, const NoiseModel& noise) {
  return synthesize(rig, make_sources(rig, sc), TrajectorySpec::fixed({rig.baseline_d / 2, 0.0}, seconds),
                    Eigen::Matrix3d::Identity(), noise);
}

}  // namespace

TEST_CASE("circle_intersect reference values") {
  const auto a = circle_intersect(6.0, 8.0, 10.0);
  CHECK(a.feasible);
  CHECK(a.point.x() == doctest::Approx(3.6));
  CHECK(a.point.y() == doctest::Approx(4.8));

  const auto b = circle_intersect(5.0, 5.0, 10.0);
  CHECK(b.point.x() == doctest::Approx(5.0));
  CHECK(b.point.y() == doctest::Approx(0.0));

  const auto c = circle_intersect(2.0, 2.0, 10.0);
  CHECK_FALSE(c.feasible);
  CHECK(c.point.x() == doctest::Approx(5.0));
  CHECK(c.point.y() == 0.0);

  CHECK_THROWS_AS(circle_intersect(0.0, 1.0, 10.0), Error);
  CHECK_THROWS_AS(circle_intersect(1.0, 1.0, -1.0), Error);
}

TEST_CASE("update_cos2 reference values") {
  const auto c = update_cos2(3.0, 4.0, 10.0);
  CHECK(c.c20 == doctest::Approx(16.0 / 25.0));
  CHECK(c.c30 == doctest::Approx(16.0 / 65.0));
  const auto on_baseline = update_cos2(5.0, 0.0, 10.0);
  CHECK(on_baseline.c20 == 0.0);
  CHECK(on_baseline.c30 == 0.0);
  try {
    update_cos2(0.0, 0.0, 10.0);
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
  CHECK_THROWS_AS(update_cos2(10.0, 0.0, 10.0), Error);
}

TEST_CASE("equal amplitudes place the sensor on the perpendicular bisector") {
  const RigConfig rig = calibrated_rig();
  for (double h : {10.0, 50.0, 200.0}) {
    SolverState st;
    const auto est = locate({h, h}, rig, st);
    CHECK(est.raw_position.x() == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("noiseless round trip recovers the position") {
  const RigConfig rig = calibrated_rig();
  for (const Vec2 p : {Vec2(3, 4), Vec2(1, 1), Vec2(9, 9), Vec2(5, 0.75), Vec2(0.5, 10.75), Vec2(7.5, 3.25)}) {
    SolverState st;
    const auto est = locate(exact_h(rig, p), rig, st);
    CHECK(est.quality == Quality::Ok);
    CHECK(est.converged);
    CHECK((est.position - p).norm() < 1e-3);
  }
}

TEST_CASE("synthesized stream through the full front end locates (3,4)") {
  RigConfig rig = calibrated_rig();
  const auto s = synthesize(rig, make_sources(rig), TrajectorySpec::fixed({3, 4}, 1.0), Eigen::Matrix3d::Identity(),
                            NoiseModel::preset("noiseless"));
  Tracker tr(rig, FilterSpec{}, SolverOptions{});
  std::optional<PositionEstimate> last;
  for (const auto& x : s)
    if (auto e = tr.step(x)) last = e;
  REQUIRE(last);
  CHECK((last->position - Vec2(3, 4)).norm() < 1e-3);
}

TEST_CASE("amplitudes below the floor are out of range and keep the last output") {
  const RigConfig rig = calibrated_rig();
  SolverOptions opts;
  opts.noise_floor = 1.0;
  SolverState st;
  const auto good = locate(exact_h(rig, {4, 4}), rig, st, opts);
  CHECK(good.quality == Quality::Ok);
  const auto bad = locate({0.1, 0.1}, rig, st, opts);
  CHECK(bad.quality == Quality::OutOfRange);
  CHECK(bad.position == good.position);
  CHECK(*st.last_output == good.position);
  CHECK_FALSE(st.warm);

  SolverState fresh;
  const auto none = locate({0.1, 0.1}, rig, fresh, opts);
  CHECK(none.quality == Quality::OutOfRange);
  CHECK(std::isnan(none.position.x()));
}

TEST_CASE("uncalibrated rig is refused") {
  SolverState st;
  try {
    locate({10, 10}, RigConfig{}, st);
    FAIL("expected Uncalibrated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Uncalibrated);
  }
  CHECK_THROWS_AS(Tracker(RigConfig{}, FilterSpec{}, SolverOptions{}), Error);
}

TEST_CASE("warm-started solves converge within five iterations across the grid") {
  const RigConfig rig = calibrated_rig();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const Vec2 p(0.5 + i, 0.75 + j);
      SolverState st;
      const auto cold = locate(exact_h(rig, p), rig, st);
      REQUIRE(cold.converged);
      const auto warm = locate(exact_h(rig, p), rig, st);
      CHECK(warm.warm_started);
      CHECK(warm.converged);
      CHECK(warm.iterations <= 5);
      CHECK((warm.position - cold.position).norm() < 1e-6);
    }
}

TEST_CASE("warm and cold solves agree after a small move") {
  const RigConfig rig = calibrated_rig();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(1.0, 9.0);
  std::uniform_real_distribution<double> uy(1.0, 10.0);
  std::uniform_real_distribution<double> step(-0.005, 0.005);  // one sample of 0.5 cm/s motion
  // Same budget for both, so only the starting point differs.
  SolverOptions opts;
  opts.max_iterations = opts.cold_max_iterations;
  for (int i = 0; i < 50; ++i) {
    const Vec2 p(ux(rng), uy(rng));
    const Vec2 q = p + Vec2(step(rng), step(rng));
    SolverState warm;
    locate(exact_h(rig, p), rig, warm, opts);
    const auto w = locate(exact_h(rig, q), rig, warm, opts);
    SolverState cold;
    const auto c = locate(exact_h(rig, q), rig, cold, opts);
    CHECK(w.warm_started);
    REQUIRE(w.converged);
    REQUIRE(c.converged);
    CHECK(w.iterations <= c.iterations);
    CHECK((w.position - c.position).norm() < 1e-6);
  }
}

TEST_CASE("mirrored positions give mirrored estimates") {
  const RigConfig rig = calibrated_rig();
  for (const Vec2 p : {Vec2(2, 3), Vec2(4.5, 7), Vec2(1, 9.5)}) {
    const Vec2 m(rig.baseline_d - p.x(), p.y());
    SolverState a;
    SolverState b;
    const auto ea = locate(exact_h(rig, p), rig, a);
    const auto eb = locate(exact_h(rig, m), rig, b);
    CHECK(std::abs(ea.position.x() + eb.position.x() - rig.baseline_d) < 1e-9);
    CHECK(std::abs(ea.position.y() - eb.position.y()) < 1e-9);
  }
}

TEST_CASE("ok estimates satisfy both circle equations") {
  const RigConfig rig = calibrated_rig();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.7, 9.3);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(u(rng), u(rng));
    SolverState st;
    const auto e = locate(exact_h(rig, p), rig, st);
    REQUIRE(e.quality == Quality::Ok);
    const Vec2 x = e.raw_position;
    CHECK(std::abs(e.r20 * e.r20 - x.squaredNorm()) <= 1e-6);
    CHECK(std::abs(e.r30 * e.r30 - (x - Vec2(rig.baseline_d, 0)).squaredNorm()) <= 1e-6);
  }
}

TEST_CASE("non-intersecting circles are clamped onto the baseline") {
  const RigConfig rig = calibrated_rig();
  SolverState st;
  // Amplitudes far above anything reachable at y >= 0: both radii tiny.
  const auto e = locate({1e6, 1e6}, rig, st);
  CHECK(e.quality == Quality::ClampedInfeasible);
  CHECK(e.raw_position.y() == 0.0);
  CHECK(e.near_field);
}

TEST_CASE("dead-zone holds small moves and passes large ones") {
  SolverState st;
  st.deadzone_radius = 0.1;
  CHECK(apply_deadzone(st, {5, 5}) == Vec2(5, 5));
  CHECK(apply_deadzone(st, {5.05, 5}) == Vec2(5, 5));
  CHECK(apply_deadzone(st, {5.2, 5}) == Vec2(5.2, 5));
  CHECK(*st.last_output == Vec2(5.2, 5));
  st.deadzone_radius = 0.0;
  CHECK(apply_deadzone(st, {5.21, 5}) == Vec2(5.21, 5));
}

TEST_CASE("default noise floor") {
  CHECK(default_noise_floor(0.6, 50) == doctest::Approx(3.0 * std::sqrt(3.0) * 0.6 / std::sqrt(12.0) * 0.2));
  CHECK(default_noise_floor(0.0, 50) == 0.0);
}

TEST_CASE("calibration on a noiseless dwell recovers K") {
  RigConfig rig;
  const auto cal = calibrate(dwell(rig, {}, 3.0, silent()), rig, FilterSpec{});
  CHECK(std::abs(cal.k20 - 1.6e7) < 0.005 * 1.6e7);
  CHECK(std::abs(cal.k30 - 1.6e7) < 0.005 * 1.6e7);
  CHECK(cal.residual_spread < 1e-6);
  CHECK(cal.windows == 300 - 49);
}

TEST_CASE("calibration scales with the square of the source strength") {
  RigConfig rig;
  const auto base = calibrate(dwell(rig, {}, 3.0, silent()), rig, FilterSpec{});
  SourceConfig twice;
  twice.m_eff20 = 8000.0;
  twice.m_eff30 = 8000.0;
  const auto doubled = calibrate(dwell(rig, twice, 3.0, silent()), rig, FilterSpec{});
  CHECK(doubled.k20 / base.k20 == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(doubled.k30 / base.k30 == doctest::Approx(4.0).epsilon(1e-9));

  const auto stream = dwell(rig, {}, 3.0, silent());
  for (double s : {0.5, 2.0, 4.0}) {
    auto scaled = stream;
    for (auto& x : scaled) x.field *= s;
    const auto c = calibrate(scaled, rig, FilterSpec{});
    CHECK(c.k20 / base.k20 == doctest::Approx(s * s).epsilon(1e-9));
    CHECK(c.k30 / base.k30 == doctest::Approx(s * s).epsilon(1e-9));
  }
}

TEST_CASE("calibration failure modes") {
  RigConfig rig;
  auto code_of = [&](const std::vector<SensorSample>& s) {
    try {
      calibrate(s, rig, FilterSpec{});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  CHECK(code_of(dwell(rig, {}, 0.5, silent())) == ErrorCode::InsufficientSamples);
  std::vector<SensorSample> zeros;
  for (int i = 0; i < 300; ++i) zeros.push_back({i * 0.01, Vec3::Zero()});
  CHECK(code_of(zeros) == ErrorCode::InsufficientSamples);

  const auto moving = synthesize(rig, make_sources(rig), TrajectorySpec::linear({5, 0}, {5, 6}, 3.0),
                                 Eigen::Matrix3d::Identity(), silent());
  CHECK(code_of(moving) == ErrorCode::ExcessiveSpread);
}
