#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "manip/geometry.hpp"

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("single-axis rotations match hand-built matrices") {
  const double a = 0.37;
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  ry << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;

  CHECK((manip::rotation_from_euler({a, 0, 0}) - rx).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((manip::rotation_from_euler({0, a, 0}) - ry).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((manip::rotation_from_euler({0, 0, a}) - rz).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("composition order is yaw * pitch * roll") {
  const Eigen::Vector3d rpy(0.3, -0.4, 1.1);
  const Eigen::Matrix3d expect = manip::rotation_from_euler({0, 0, rpy.z()}) *
                                 manip::rotation_from_euler({0, rpy.y(), 0}) *
                                 manip::rotation_from_euler({rpy.x(), 0, 0});
  CHECK((manip::rotation_from_euler(rpy) - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("a quarter yaw turn maps +x onto +y") {
  const Eigen::Vector3d p =
      manip::rotation_from_euler({0, 0, kPi / 2}) * Eigen::Vector3d(0.025, 0, 0);
  CHECK(p.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(0.025));
  CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("euler angles round-trip through the rotation matrix") {
  std::mt19937_64 eng(42);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> pitch(-kPi / 2 + 0.01, kPi / 2 - 0.01);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d rpy(angle(eng), pitch(eng), angle(eng));
    const Eigen::Vector3d back =
        manip::euler_from_rotation(manip::rotation_from_euler(rpy));
    CHECK((back - rpy).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("the gimbal singularity still reproduces the rotation") {
  for (double sign : {1.0, -1.0}) {
    const Eigen::Vector3d rpy(0.5, sign * kPi / 2, -0.3);
    const Eigen::Matrix3d r = manip::rotation_from_euler(rpy);
    const Eigen::Vector3d rec = manip::euler_from_rotation(r);
    // Angles may differ (roll/yaw are coupled at the pole) but the rotation
    // itself must match.
    CHECK((manip::rotation_from_euler(rec) - r).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("to_frame undoes a pure palm translation") {
  manip::RigidPose palm;
  palm.position = Eigen::Vector3d(0, 0, 0.1);
  const Eigen::Vector3d local = manip::to_frame(palm, {0.0, 0.0, 0.3});
  CHECK(local.z() == doctest::Approx(0.2));
}

TEST_CASE("to_frame undoes a palm yaw") {
  manip::RigidPose palm;
  palm.rpy = Eigen::Vector3d(0, 0, kPi / 2);
  const Eigen::Vector3d local = manip::to_frame(palm, {0.025, 0.0, 0.0});
  CHECK(local.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(local.y() == doctest::Approx(-0.025));
}

TEST_CASE("to_frame inverts RigidPose::transform") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    manip::RigidPose frame;
    frame.position = Eigen::Vector3d(u(eng), u(eng), u(eng));
    frame.rpy = Eigen::Vector3d(u(eng), u(eng) / 2, u(eng));
    const Eigen::Vector3d p(u(eng), u(eng), u(eng));
    CHECK((manip::to_frame(frame, frame.transform(p)) - p)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("pose_in_frame relative to the identity is a no-op") {
  manip::RigidPose pose;
  pose.position = Eigen::Vector3d(0.1, -0.2, 0.3);
  pose.rpy = Eigen::Vector3d(0.2, 0.1, -0.4);
  const manip::RigidPose rel = manip::pose_in_frame(manip::RigidPose{}, pose);
  CHECK((rel.position - pose.position).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((rel.rpy - pose.rpy).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pose_in_frame composes with the frame to give the world pose") {
  std::mt19937_64 eng(9);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int i = 0; i < 50; ++i) {
    manip::RigidPose frame, world;
    frame.position = Eigen::Vector3d(u(eng), u(eng), u(eng));
    frame.rpy = Eigen::Vector3d(u(eng), u(eng) / 2, u(eng));
    world.position = Eigen::Vector3d(u(eng), u(eng), u(eng));
    world.rpy = Eigen::Vector3d(u(eng), u(eng) / 2, u(eng));

    const manip::RigidPose rel = manip::pose_in_frame(frame, world);
    // frame ∘ rel == world on both position and rotation.
    CHECK((frame.transform(rel.position) - world.position)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((frame.rotation() * rel.rotation() - world.rotation())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("is_identity respects the tolerance") {
  manip::RigidPose p;
  CHECK(p.is_identity());
  p.position.x() = 1e-12;
  CHECK(!p.is_identity());
  CHECK(p.is_identity(1e-9));
}
