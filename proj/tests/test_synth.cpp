#include "manip/synth.hpp"

#include <doctest.h>

#include <json.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "manip/verify.hpp"

namespace {

namespace fs = std::filesystem;
constexpr double kPi = 3.14159265358979323846;

fs::path temp_dir() {
  static int counter = 0;
  const fs::path d = fs::temp_directory_path() /
                     ("manip_synth_test_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
  fs::create_directories(d);
  return d;
}

manip::ObjectModel cube() {
  return manip::make_object(manip::ObjectShape::cube);
}

manip::ManipulationScript quiet_script(std::vector<manip::ScriptAction> actions,
                                       std::uint64_t seed = 0) {
  manip::ManipulationScript s;
  s.object = cube();
  s.actions = std::move(actions);
  s.seed = seed;
  s.noise_sigma = 0.0;
  return s;
}

manip::Trajectory to_trajectory(const manip::Recording& r) {
  manip::Trajectory t;
  t.dt = r.dt;
  t.rep = manip::Representation::physical;
  for (int k = 0; k < r.n_samples(); ++k) t.frames.push_back(r.frame(k));
  return t;
}

double max_fingertip_speed(const manip::Recording& r) {
  double worst = 0.0;
  for (int k = 1; k < r.n_samples(); ++k)
    for (int f = 0; f < manip::kNumFingers; ++f) {
      const Eigen::Vector3d d = (r.data.block<1, 3>(k, 3 * f) -
                                 r.data.block<1, 3>(k - 1, 3 * f))
                                    .transpose();
      worst = std::max(worst, d.norm() / r.dt);
    }
  return worst;
}

}  // namespace

TEST_CASE("a pure hold keeps every channel at the rest configuration") {
  const manip::ManipulationScript s =
      quiet_script({manip::ScriptAction::hold(1.0)}, 13);
  const manip::Recording rec = manip::synthesize(s);

  CHECK(rec.n_samples() == 101);
  CHECK(rec.dt == doctest::Approx(0.01));
  CHECK_FALSE(rec.has_gaps());
  CHECK(rec.data.cols() == manip::kRecordingChannels);

  // Every row identical to the first.
  for (int k = 1; k < rec.n_samples(); ++k)
    CHECK((rec.data.row(k) - rec.data.row(0)).lpNorm<Eigen::Infinity>() ==
          doctest::Approx(0.0));

  const auto pts = manip::base_contact_points(s.object, s.seed);
  const manip::RigidPose rest = manip::base_object_pose();
  const manip::Frame f0 = rec.frame(0);
  for (int f = 0; f < manip::kNumFingers; ++f)
    CHECK((f0.fingertips[static_cast<std::size_t>(f)] -
           rest.transform(pts[static_cast<std::size_t>(f)]))
              .norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((f0.object_position - Eigen::Vector3d(0, 0, 0.06)).norm() ==
        doctest::Approx(0.0));
  CHECK(f0.object_orientation.norm() == doctest::Approx(0.0));

  // Palm channels are identity (all zero).
  CHECK(rec.data.rightCols(manip::kPalmChannels).lpNorm<Eigen::Infinity>() ==
        0.0);
}

TEST_CASE("sample count follows the 100 Hz clock") {
  CHECK(manip::synthesize(quiet_script({manip::ScriptAction::hold(0.35)}))
            .n_samples() == 36);
  CHECK(manip::synthesize(quiet_script({manip::ScriptAction::hold(1.2)}))
            .n_samples() == 121);
}

TEST_CASE("rotation carries grounded fingertips rigidly with the object") {
  manip::ManipulationScript s = quiet_script({}, 5);
  manip::ScriptAction a;
  a.kind = manip::ScriptAction::Kind::rotate_x;
  a.amount = 20.0 * kPi / 180.0;
  a.duration = 1.0;
  s.actions = {a};
  const manip::Recording rec = manip::synthesize(s);

  const int last = rec.n_samples() - 1;
  const manip::Frame fn = rec.frame(last);
  CHECK(fn.object_orientation(0) == doctest::Approx(a.amount).epsilon(1e-12));
  CHECK(std::abs(fn.object_orientation(1)) < 1e-12);
  CHECK(std::abs(fn.object_orientation(2)) < 1e-12);

  // Fingertips must equal the rotated contact points exactly (no noise).
  const auto pts = manip::base_contact_points(s.object, s.seed);
  manip::RigidPose pose = manip::base_object_pose();
  pose.rpy = Eigen::Vector3d(a.amount, 0.0, 0.0);
  for (int f = 0; f < manip::kNumFingers; ++f)
    CHECK((fn.fingertips[static_cast<std::size_t>(f)] -
           pose.transform(pts[static_cast<std::size_t>(f)]))
              .norm() < 1e-9);

  // Smooth ramp: halfway through, half the angle; ends with zero velocity.
  const manip::Frame mid = rec.frame(50);
  CHECK(mid.object_orientation(0) ==
        doctest::Approx(a.amount / 2.0).epsilon(1e-9));
  CHECK((rec.data.row(1) - rec.data.row(0)).lpNorm<Eigen::Infinity>() < 1e-5);
  CHECK((rec.data.row(last) - rec.data.row(last - 1))
            .lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("sequential actions compose to the scripted end pose") {
  manip::ManipulationScript s = quiet_script({});
  auto add = [&](manip::ScriptAction::Kind k, double amount) {
    manip::ScriptAction a;
    a.kind = k;
    a.amount = amount;
    a.duration = 0.8;
    s.actions.push_back(a);
    s.actions.push_back(manip::ScriptAction::hold(0.3));
  };
  add(manip::ScriptAction::Kind::rotate_x, 15.0 * kPi / 180.0);
  add(manip::ScriptAction::Kind::rotate_y, -10.0 * kPi / 180.0);
  add(manip::ScriptAction::Kind::translate_y, 0.05);

  const manip::Recording rec = manip::synthesize(s);
  const manip::Frame fn = rec.frame(rec.n_samples() - 1);
  CHECK(fn.object_orientation(0) ==
        doctest::Approx(15.0 * kPi / 180.0).epsilon(1e-9));
  CHECK(fn.object_orientation(1) ==
        doctest::Approx(-10.0 * kPi / 180.0).epsilon(1e-9));
  CHECK(fn.object_position(1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(fn.object_position(2) == doctest::Approx(0.06).epsilon(1e-12));

  const manip::RigidPose end = manip::object_pose_at(s, s.total_duration());
  CHECK((end.position - fn.object_position).norm() < 1e-12);
  CHECK((end.rpy - fn.object_orientation).norm() < 1e-12);
}

TEST_CASE("gait dip reproduces the scripted contact trace step for step") {
  manip::ManipulationScript s = quiet_script({manip::ScriptAction::hold(1.2)}, 7);
  manip::GaitEvent e;
  e.finger = 1;  // index finger: rests on the +x cube face
  e.time_s = 0.35;
  e.duration = 0.4;
  e.lift_height = 0.04;
  s.gait_events = {e};

  const manip::Recording rec = manip::synthesize(s);
  const manip::Trajectory traj = to_trajectory(rec);
  const double tau = manip::VerifyConfig{}.tau;
  const double half_edge = s.object.cube_edge / 2.0;

  // The surface cloud grid has spacing edge / ceil(edge / resolution); a
  // point on the face is never farther than half a cell diagonal from a
  // sample, so analytic height h above the face classifies a step whenever
  // h falls outside the band (sqrt(tau^2 - err^2), tau].
  const double spacing =
      s.object.cube_edge /
      std::ceil(s.object.cube_edge / s.object.surface_resolution);
  const double grid_err = spacing * std::sqrt(2.0) / 2.0;
  const double sure_contact = std::sqrt(tau * tau - grid_err * grid_err);

  // The object never moves (hold-only script), so the lifted fingertip's
  // height above its face comes straight off the recorded data.
  std::vector<int> expected;
  for (int k = 0; k < rec.n_samples(); ++k) {
    const double h =
        rec.frame(k).fingertips[1].x() - (0.0 + half_edge);
    REQUIRE(h >= -1e-12);
    const bool ambiguous = h > sure_contact && h <= tau;
    REQUIRE_FALSE(ambiguous);
    expected.push_back(h <= tau ? 5 : 4);
  }

  const manip::ContactReport report = manip::check_contacts(traj, s.object);
  REQUIRE(report.contact_count.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(report.contact_count[k] == expected[k]);

  // Invert the lift profile analytically: the fingertip crosses height tau
  // at 16 t^2 (1-t)^2 = tau / lift, i.e. t = (1 -+ sqrt(1 - sqrt(c))) / 2.
  const double c = std::sqrt(tau / e.lift_height);
  const double root = std::sqrt(1.0 - c);
  const int lift_step = static_cast<int>(std::floor(
                            (e.time_s + (1.0 - root) / 2.0 * e.duration) /
                            rec.dt)) +
                        1;
  const int replace_step = static_cast<int>(std::floor(
                               (e.time_s + (1.0 + root) / 2.0 * e.duration) /
                               rec.dt)) +
                           1;

  const manip::GaitingResult gait = manip::detect_gaiting(report.contact_count);
  CHECK(gait.detected);
  REQUIRE(gait.transitions.size() == 2);
  CHECK(gait.transitions[0].step == lift_step);
  CHECK(gait.transitions[0].old_count == 5);
  CHECK(gait.transitions[0].new_count == 4);
  CHECK(gait.transitions[1].step == replace_step);
  CHECK(gait.transitions[1].old_count == 4);
  CHECK(gait.transitions[1].new_count == 5);
}

TEST_CASE("gait arcs land on a fresh contact point on the same face") {
  manip::ManipulationScript s = quiet_script({manip::ScriptAction::hold(1.0)}, 3);
  manip::GaitEvent e;
  e.finger = 2;
  e.time_s = 0.2;
  e.duration = 0.4;
  s.gait_events = {e};
  const manip::Recording rec = manip::synthesize(s);

  const Eigen::Vector3d before = rec.frame(0).fingertips[2];
  const Eigen::Vector3d after =
      rec.frame(rec.n_samples() - 1).fingertips[2];
  // Same +x face (exactly on it), different in-face spot.
  CHECK(before.x() == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(after.x() == doctest::Approx(0.025).epsilon(1e-12));
  CHECK((after - before).norm() > 1e-5);

  // All other fingers never move.
  for (int f = 0; f < manip::kNumFingers; ++f) {
    if (f == 2) continue;
    for (int k = 0; k < rec.n_samples(); ++k)
      CHECK((rec.frame(k).fingertips[static_cast<std::size_t>(f)] -
             rec.frame(0).fingertips[static_cast<std::size_t>(f)])
                .norm() < 1e-15);
  }
}

TEST_CASE("kinematic fingertip speeds stay well under half a meter per second") {
  const auto scripts = manip::random_scripts(cube(), 2, 0.4, 11);
  for (auto s : scripts) {
    s.noise_sigma = 0.0;
    CHECK(max_fingertip_speed(manip::synthesize(s)) < 0.5);
  }
}

TEST_CASE("fingertip noise is seeded and leaves object channels untouched") {
  manip::ManipulationScript s = quiet_script({manip::ScriptAction::hold(0.5)}, 9);
  s.noise_sigma = 0.0005;
  const manip::Recording a = manip::synthesize(s);
  const manip::Recording b = manip::synthesize(s);
  CHECK((a.data - b.data).lpNorm<Eigen::Infinity>() == 0.0);

  manip::ManipulationScript other = s;
  other.seed = 10;
  const manip::Recording c = manip::synthesize(other);
  CHECK((a.data.leftCols(15) - c.data.leftCols(15)).lpNorm<Eigen::Infinity>() >
        0.0);

  manip::ManipulationScript clean = s;
  clean.noise_sigma = 0.0;
  const manip::Recording d = manip::synthesize(clean);
  // Noise perturbs fingertip columns only.
  CHECK((a.data.leftCols(15) - d.data.leftCols(15)).lpNorm<Eigen::Infinity>() >
        0.0);
  CHECK((a.data.rightCols(manip::kRecordingChannels - 15) -
         d.data.rightCols(manip::kRecordingChannels - 15))
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("scripts that leave the pose envelope are rejected") {
  manip::ScriptAction a;
  a.kind = manip::ScriptAction::Kind::rotate_x;
  a.amount = 30.0 * kPi / 180.0;
  a.duration = 1.0;
  CHECK_THROWS_AS(quiet_script({a}).validate(), std::invalid_argument);

  // Cumulative drift counts too, not only a single action.
  a.amount = 15.0 * kPi / 180.0;
  CHECK_THROWS_AS(quiet_script({a, a}).validate(), std::invalid_argument);
  CHECK_NOTHROW(quiet_script({a}).validate());

  manip::ScriptAction t;
  t.kind = manip::ScriptAction::Kind::translate_y;
  t.amount = 0.15;
  t.duration = 1.0;
  CHECK_THROWS_AS(quiet_script({t}).validate(), std::invalid_argument);

  manip::ManipulationScript bad = quiet_script({manip::ScriptAction::hold(1.0)});
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("gait plans must keep at least two fingers grounded") {
  auto with_lifts = [](std::vector<int> fingers) {
    manip::ManipulationScript s;
    s.object = manip::make_object(manip::ObjectShape::cube);
    s.actions = {manip::ScriptAction::hold(2.0)};
    for (int f : fingers) {
      manip::GaitEvent e;
      e.finger = f;
      e.time_s = 0.5;
      e.duration = 0.4;
      s.gait_events.push_back(e);
    }
    return s;
  };
  CHECK_NOTHROW(with_lifts({1, 2, 3}).validate());
  CHECK_THROWS_AS(with_lifts({1, 2, 3, 4}).validate(), manip::ScriptInfeasible);
  // One finger cannot be lifted twice at once.
  CHECK_THROWS_AS(with_lifts({2, 2}).validate(), manip::ScriptInfeasible);

  manip::ManipulationScript late = with_lifts({});
  manip::GaitEvent e;
  e.finger = 1;
  e.time_s = 1.9;
  e.duration = 0.4;  // runs past the end of the script
  late.gait_events = {e};
  CHECK_THROWS_AS(late.validate(), std::invalid_argument);
}

TEST_CASE("dataset split puts five of six recordings in train") {
  const auto scripts = manip::random_scripts(cube(), 6, 0.1, 3);
  const manip::Dataset d = manip::make_dataset(scripts, 5, 1, 42);
  CHECK(d.train.size() == 5);
  CHECK(d.test.size() == 1);
  CHECK(d.warning.empty());

  std::vector<int> all = d.train_indices;
  all.insert(all.end(), d.test_indices.begin(), d.test_indices.end());
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<int>({0, 1, 2, 3, 4, 5}));

  // Deterministic: a second call reproduces indices and data bit for bit.
  const manip::Dataset d2 = manip::make_dataset(scripts, 5, 1, 42);
  CHECK(d2.train_indices == d.train_indices);
  CHECK(d2.test_indices == d.test_indices);
  for (std::size_t i = 0; i < d.train.size(); ++i)
    CHECK((d.train[i].data - d2.train[i].data).lpNorm<Eigen::Infinity>() ==
          0.0);

  // Different seed, different shuffle (6 scripts, so collisions are rare).
  const manip::Dataset d3 = manip::make_dataset(scripts, 5, 1, 43);
  CHECK(d3.test_indices != d.test_indices);
}

TEST_CASE("degenerate split keeps everything in train and warns") {
  const auto scripts = manip::random_scripts(cube(), 1, 0.1, 3);
  const manip::Dataset d = manip::make_dataset(scripts, 5, 1, 0);
  CHECK(d.train.size() == 1);
  CHECK(d.test.empty());
  CHECK_FALSE(d.warning.empty());
}

TEST_CASE("random scripts are reproducible and stay inside the envelope") {
  const auto a = manip::random_scripts(cube(), 3, 0.5, 21);
  const auto b = manip::random_scripts(cube(), 3, 0.5, 21);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    REQUIRE(a[i].actions.size() == b[i].actions.size());
    for (std::size_t j = 0; j < a[i].actions.size(); ++j) {
      CHECK(a[i].actions[j].kind == b[i].actions[j].kind);
      CHECK(a[i].actions[j].amount == b[i].actions[j].amount);
      CHECK(a[i].actions[j].duration == b[i].actions[j].duration);
    }
    REQUIRE(a[i].gait_events.size() == b[i].gait_events.size());
    for (std::size_t j = 0; j < a[i].gait_events.size(); ++j) {
      CHECK(a[i].gait_events[j].time_s == b[i].gait_events[j].time_s);
      CHECK(a[i].gait_events[j].finger == b[i].gait_events[j].finger);
    }
    CHECK(a[i].total_duration() == doctest::Approx(30.0).epsilon(1e-12));
    CHECK_NOTHROW(a[i].validate());
  }

  const auto c = manip::random_scripts(cube(), 3, 0.5, 22);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i)
    differs = c[i].actions.size() != a[i].actions.size() ||
              c[i].actions[0].amount != a[i].actions[0].amount;
  CHECK(differs);
}

TEST_CASE("scripts survive a save/load round trip") {
  manip::ManipulationScript s;
  s.object = manip::make_object(manip::ObjectShape::cylinder);
  s.seed = 99;
  s.noise_sigma = 0.001;
  manip::ScriptAction a;
  a.kind = manip::ScriptAction::Kind::rotate_y;
  a.amount = -0.2;
  a.duration = 1.5;
  s.actions = {a, manip::ScriptAction::hold(1.0)};
  manip::GaitEvent e;
  e.finger = 3;
  e.time_s = 1.7;
  e.lift_height = 0.03;
  e.duration = 0.5;
  s.gait_events = {e};

  const fs::path dir = temp_dir();
  const fs::path file = dir / "script.json";
  manip::save_script(file, s);

  // Fingers are stored by name, not index.
  {
    std::ifstream in(file);
    const nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j.at("kind") == "script");
    CHECK(j.at("gait_events").at(0).at("finger") == "ring");
  }

  const manip::ManipulationScript r = manip::load_script(file);
  CHECK(r.object.shape == s.object.shape);
  CHECK(r.seed == s.seed);
  CHECK(r.noise_sigma == s.noise_sigma);
  REQUIRE(r.actions.size() == 2);
  CHECK(r.actions[0].kind == manip::ScriptAction::Kind::rotate_y);
  CHECK(r.actions[0].amount == -0.2);
  CHECK(r.actions[0].duration == 1.5);
  REQUIRE(r.gait_events.size() == 1);
  CHECK(r.gait_events[0].finger == 3);
  CHECK(r.gait_events[0].time_s == 1.7);
  CHECK(r.gait_events[0].lift_height == 0.03);

  // A JSON of the wrong kind is refused.
  const fs::path other = dir / "other.json";
  {
    std::ofstream out(other);
    out << "{\"kind\": \"dictionary\"}\n";
  }
  CHECK_THROWS_AS(manip::load_script(other), manip::IoError);
  fs::remove_all(dir);
}

TEST_CASE("synthesized recordings pass the full constraint verifier") {
  auto scripts = manip::random_scripts(cube(), 1, 0.2, 17);
  scripts[0].noise_sigma = 0.0;
  const manip::Recording rec = manip::synthesize(scripts[0]);
  const manip::Trajectory traj = to_trajectory(rec);

  const manip::Workspace ws =
      manip::fit_workspace(std::vector<manip::Trajectory>{traj}, 0.01);
  const manip::ConstraintReport rep =
      manip::verify_trajectory(traj, scripts[0].object, ws);
  CHECK(rep.ok());
  for (int c : rep.contact_count) CHECK(c >= 4);
}
