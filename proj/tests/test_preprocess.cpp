#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "manip/model.hpp"
#include "manip/preprocess.hpp"
#include "manip/types.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

manip::Recording flat_recording(int n, double value = 0.1) {
  manip::Recording r;
  r.data = Eigen::MatrixXd::Constant(n, manip::kRecordingChannels, value);
  r.data.rightCols(6).setZero();  // identity palm
  return r;
}

void mark_missing(manip::Recording& r, int row, int col) {
  if (r.missing.size() == 0)
    r.missing.setConstant(r.data.rows(), r.data.cols(), false);
  r.missing(row, col) = true;
}

// Peak amplitude of one channel after discarding edge samples (filter
// transients would otherwise contaminate the measurement).
double steady_amplitude(const manip::Recording& r, int col, int skip) {
  return r.data.col(col)
      .segment(skip, r.data.rows() - 2 * skip)
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace

TEST_CASE("fill_gaps leaves a gap-free recording untouched") {
  const manip::Recording r = flat_recording(50);
  const manip::Recording out = manip::fill_gaps(r);
  CHECK((out.data - r.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK(!out.has_gaps());
}

TEST_CASE("fill_gaps restores a missing sample on a linear ramp exactly") {
  manip::Recording r = flat_recording(20);
  for (int i = 0; i < 20; ++i) r.data(i, 3) = 0.01 * i;
  mark_missing(r, 7, 3);
  r.data(7, 3) = 999.0;  // must be ignored
  const manip::Recording out = manip::fill_gaps(r);
  CHECK(out.data(7, 3) == doctest::Approx(0.07).epsilon(1e-12));
  CHECK(!out.has_gaps());
}

TEST_CASE("fill_gaps tracks a sine to 1e-3 of amplitude across a 30-sample gap") {
  const int n = 400;
  manip::Recording r = flat_recording(n);
  const double f = 0.25;  // Hz; slow relative to the 0.3 s gap
  for (int i = 0; i < n; ++i)
    r.data(i, 5) = std::sin(2.0 * kPi * f * i * r.dt);
  for (int i = 100; i < 130; ++i) mark_missing(r, i, 5);
  const manip::Recording out = manip::fill_gaps(r, 0.35);
  double max_err = 0.0;
  for (int i = 100; i < 130; ++i)
    max_err = std::max(max_err,
                       std::abs(out.data(i, 5) - std::sin(2.0 * kPi * f * i * r.dt)));
  CHECK(max_err < 1e-3);
}

TEST_CASE("fill_gaps rejects gaps longer than the limit") {
  manip::Recording r = flat_recording(100);
  for (int i = 40; i < 65; ++i) mark_missing(r, i, 2);  // 0.25 s
  CHECK_THROWS_AS(manip::fill_gaps(r, 0.2), manip::GapTooLong);
  CHECK_NOTHROW(manip::fill_gaps(r, 0.3));
}

TEST_CASE("fill_gaps cannot extrapolate edge gaps") {
  manip::Recording lead = flat_recording(50);
  mark_missing(lead, 0, 0);
  CHECK_THROWS_AS(manip::fill_gaps(lead), manip::GapTooLong);

  manip::Recording trail = flat_recording(50);
  mark_missing(trail, 49, 8);
  CHECK_THROWS_AS(manip::fill_gaps(trail), manip::GapTooLong);
}

TEST_CASE("split_at_long_gaps cuts around oversized gaps") {
  manip::Recording r = flat_recording(300);
  for (int i = 0; i < 300; ++i) r.data(i, 1) = 0.001 * i;
  for (int i = 120; i < 170; ++i) mark_missing(r, i, 1);  // 0.5 s, too long
  mark_missing(r, 30, 2);  // short gap, stays interpolable

  const auto parts = manip::split_at_long_gaps(r, 0.2);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].n_samples() == 120);
  CHECK(parts[1].n_samples() == 130);
  CHECK(parts[1].data(0, 1) == doctest::Approx(0.170));
  for (const auto& p : parts) CHECK_NOTHROW(manip::fill_gaps(p, 0.2));
}

TEST_CASE("to_palm_frame with an identity palm is a no-op") {
  manip::Recording r = flat_recording(10, 0.2);
  const manip::Recording out = manip::to_palm_frame(r);
  CHECK((out.data - r.data).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("to_palm_frame subtracts a pure palm translation") {
  manip::Recording r = flat_recording(4, 0.0);
  r.data(2, 17) = 0.3;     // object z, world frame
  r.data(2, 23) = 0.1;     // palm z
  const manip::Recording out = manip::to_palm_frame(r);
  CHECK(out.data(2, 17) == doctest::Approx(0.2));
  CHECK(out.data.rightCols(6).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("to_palm_frame rotates world points into a yawed palm") {
  manip::Recording r = flat_recording(3, 0.0);
  r.data(1, 0) = 0.025;         // thumb x, world
  r.data(1, 26) = kPi / 2.0;    // palm yaw
  const manip::Recording out = manip::to_palm_frame(r);
  CHECK(std::abs(out.data(1, 0)) < 1e-12);
  CHECK(out.data(1, 1) == doctest::Approx(-0.025));
}

TEST_CASE("lowpass keeps constants exactly (unit DC gain)") {
  manip::Recording r = flat_recording(64, 0.123);
  const manip::Recording out = manip::lowpass(r, 20.0);
  CHECK((out.data.leftCols(21).array() - 0.123).abs().maxCoeff() < 1e-12);
}

TEST_CASE("lowpass attenuates 40 Hz by at least 12 dB and passes 1 Hz") {
  const int n = 1000;
  manip::Recording r = flat_recording(n, 0.0);
  for (int i = 0; i < n; ++i) {
    r.data(i, 4) = std::sin(2.0 * kPi * 40.0 * i * r.dt);
    r.data(i, 5) = std::sin(2.0 * kPi * 1.0 * i * r.dt);
  }
  const manip::Recording out = manip::lowpass(r, 20.0);
  const double hi = steady_amplitude(out, 4, 100);
  const double lo = steady_amplitude(out, 5, 100);
  CHECK(hi < std::pow(10.0, -12.0 / 20.0));  // >= 12 dB down
  CHECK(lo == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("lowpass is nearly idempotent on band-limited data") {
  const int n = 1200;
  manip::Recording r = flat_recording(n, 0.0);
  for (int i = 0; i < n; ++i)
    r.data(i, 7) = std::sin(2.0 * kPi * 2.0 * i * r.dt) +
                   0.5 * std::sin(2.0 * kPi * 5.0 * i * r.dt);
  const manip::Recording once = manip::lowpass(r, 20.0);
  const manip::Recording twice = manip::lowpass(once, 20.0);
  const double e_once = once.data.col(7).squaredNorm();
  const double e_twice = twice.data.col(7).squaredNorm();
  CHECK(std::abs(e_twice - e_once) / e_once < 0.01);
}

TEST_CASE("lowpass rejects cutoffs at or above Nyquist") {
  const manip::Recording r = flat_recording(32);
  CHECK_THROWS_AS(manip::lowpass(r, 50.0), manip::InvalidCutoff);
  CHECK_THROWS_AS(manip::lowpass(r, 0.0), manip::InvalidCutoff);
  CHECK_NOTHROW(manip::lowpass(r, 49.0));
}

TEST_CASE("segment windows, offsets, and discards the remainder") {
  manip::Recording r = flat_recording(150, 0.0);
  for (int i = 0; i < 150; ++i) r.data(i, 1) = 1e-4 * i;  // thumb x ramp

  const manip::DemoMatrix m = manip::segment(r, manip::OffsetSpec{}, "ramp");
  CHECK(m.n_segments() == 1);
  CHECK(m.n_steps == 100);
  REQUIRE(m.segment_sources.size() == 1);
  CHECK(m.segment_sources[0].recording == "ramp");
  CHECK(m.segment_sources[0].start_sample == 0);
  CHECK((m.v.array() >= 0.0).all());

  // Column 0 must equal the flattened, offset first window.
  manip::Trajectory w;
  w.dt = r.dt;
  w.rep = manip::Representation::physical;
  for (int i = 0; i < 100; ++i) w.frames.push_back(r.frame(i));
  const Eigen::VectorXd expect =
      manip::flatten(manip::apply_offset(w, manip::OffsetSpec{}));
  CHECK((m.v.col(0) - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("segment count is floor(samples / 100)") {
  for (int n : {100, 199, 200, 430}) {
    const manip::DemoMatrix m =
        manip::segment(flat_recording(n, 0.05), manip::OffsetSpec{});
    CHECK(m.n_segments() == n / 100);
  }
}

TEST_CASE("segment surfaces out-of-range data as OffsetInsufficient") {
  manip::Recording r = flat_recording(100, 0.0);
  r.data(50, 1) = -0.9;
  CHECK_THROWS_AS(manip::segment(r, manip::OffsetSpec{}),
                  manip::OffsetInsufficient);
}

TEST_CASE("concat stacks columns and checks offsets agreement") {
  const manip::DemoMatrix a =
      manip::segment(flat_recording(200, 0.05), manip::OffsetSpec{}, "a");
  const manip::DemoMatrix b =
      manip::segment(flat_recording(100, 0.07), manip::OffsetSpec{}, "b");
  const manip::DemoMatrix m = manip::concat({a, b});
  CHECK(m.n_segments() == 3);
  CHECK((m.v.col(2) - b.v.col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.segment_sources[2].recording == "b");

  manip::DemoMatrix c = b;
  c.offsets.position_offset = 1.0;
  CHECK_THROWS_AS(manip::concat({a, c}), manip::DimensionMismatch);
}

TEST_CASE("recording frame extraction follows the channel layout") {
  manip::Recording r = flat_recording(2, 0.0);
  r.data(1, 0) = 0.11;   // thumb x
  r.data(1, 15) = 0.22;  // obj x
  r.data(1, 20) = 0.33;  // obj yaw
  const manip::Frame f = r.frame(1);
  CHECK(f.fingertips[0].x() == 0.11);
  CHECK(f.object_position.x() == 0.22);
  CHECK(f.object_orientation.z() == 0.33);

  const manip::RigidPose palm = r.palm(1);
  CHECK(palm.position.z() == 0.0);
}
