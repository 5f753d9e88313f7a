#pragma once

#include <Eigen/Dense>

namespace manip {

/// Rotation matrix for roll/pitch/yaw (psi, theta, phi), intrinsic z-y'-x''
/// convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Eigen::Matrix3d rotation_from_euler(const Eigen::Vector3d& rpy);

/// Inverse of rotation_from_euler. Pitch is reported in [-pi/2, pi/2];
/// near the gimbal singularity roll is folded into yaw.
Eigen::Vector3d euler_from_rotation(const Eigen::Matrix3d& r);

/// Position plus roll/pitch/yaw orientation.
struct RigidPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();

  Eigen::Matrix3d rotation() const { return rotation_from_euler(rpy); }
  Eigen::Vector3d transform(const Eigen::Vector3d& p_local) const {
    return position + rotation() * p_local;
  }
  bool is_identity(double tol = 0.0) const {
    return position.lpNorm<Eigen::Infinity>() <= tol &&
           rpy.lpNorm<Eigen::Infinity>() <= tol;
  }
};

/// Expresses a world-frame point in the given reference pose's frame.
Eigen::Vector3d to_frame(const RigidPose& frame, const Eigen::Vector3d& p_world);

/// Expresses a world-frame pose in the given reference pose's frame.
RigidPose pose_in_frame(const RigidPose& frame, const RigidPose& pose_world);

}  // namespace manip
