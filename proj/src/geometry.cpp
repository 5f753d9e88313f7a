#include "manip/geometry.hpp"

#include <cmath>

namespace manip {

Eigen::Matrix3d rotation_from_euler(const Eigen::Vector3d& rpy) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  return (AngleAxisd(rpy.z(), Vector3d::UnitZ()) *
          AngleAxisd(rpy.y(), Vector3d::UnitY()) *
          AngleAxisd(rpy.x(), Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Vector3d euler_from_rotation(const Eigen::Matrix3d& r) {
  // R = Rz(yaw) Ry(pitch) Rx(roll): R(2,0) = -sin(pitch).
  const double sp = -r(2, 0);
  Eigen::Vector3d rpy;
  if (std::abs(sp) < 1.0 - 1e-12) {
    rpy.y() = std::asin(sp);
    rpy.x() = std::atan2(r(2, 1), r(2, 2));
    rpy.z() = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal singularity: pitch = +-pi/2, only roll-+yaw is observable; fold
    // everything into roll. At either pole r(1,1) = cos(roll-+yaw) and
    // r(1,2) = -sin(roll-+yaw).
    rpy.y() = std::copysign(M_PI / 2.0, sp);
    rpy.x() = std::atan2(-r(1, 2), r(1, 1));
    rpy.z() = 0.0;
  }
  return rpy;
}

Eigen::Vector3d to_frame(const RigidPose& frame, const Eigen::Vector3d& p_world) {
  return frame.rotation().transpose() * (p_world - frame.position);
}

RigidPose pose_in_frame(const RigidPose& frame, const RigidPose& pose_world) {
  RigidPose out;
  const Eigen::Matrix3d rf = frame.rotation();
  out.position = rf.transpose() * (pose_world.position - frame.position);
  out.rpy = euler_from_rotation(rf.transpose() * pose_world.rotation());
  return out;
}

}  // namespace manip
