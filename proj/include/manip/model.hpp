#pragma once

#include <Eigen/Dense>

#include "manip/types.hpp"

namespace manip {

/// Stacks the frames of a trajectory into a single column vector of length
/// 21*N, frame-major (frame k occupies rows [21(k-1), 21k)).
Eigen::VectorXd flatten(const Trajectory& t);

/// Inverse of flatten; v.size() must be a positive multiple of 21.
Trajectory unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, double dt,
                     Representation rep);

/// Per-frame additive shift as a flat vector of length 21*n_steps: position
/// features get position_offset, orientation features orientation_offset.
Eigen::VectorXd offset_pattern(int n_steps, const OffsetSpec& s);

/// Physical -> offset representation. Throws OffsetInsufficient if any
/// shifted feature would be negative (data outside the assumed range).
Trajectory apply_offset(const Trajectory& t, const OffsetSpec& s);

/// Offset -> physical representation.
Trajectory remove_offset(const Trajectory& t, const OffsetSpec& s);

Frame apply_offset(const Frame& f, const OffsetSpec& s);
Frame remove_offset(const Frame& f, const OffsetSpec& s);

/// W * h with a dimension check. Works on any matrix, not only full
/// 21-feature dictionaries, so small synthetic cases stay testable.
Eigen::VectorXd activate(const Eigen::Ref<const Eigen::MatrixXd>& w,
                         const Eigen::Ref<const Eigen::VectorXd>& h);

/// Reconstructs the trajectory encoded by activations h. The result is in
/// offset representation; callers de-offset with remove_offset.
Trajectory reconstruct(const Dictionary& d, const ActivationVector& h);

}  // namespace manip
