#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "manip/geometry.hpp"
#include "manip/preprocess.hpp"
#include "manip/types.hpp"

namespace manip {

/// Per-finger axis-aligned reachable region, inclusive at the faces.
struct Workspace {
  std::array<Eigen::Vector3d, kNumFingers> lo;
  std::array<Eigen::Vector3d, kNumFingers> hi;
  double margin = 0.005;  // already folded into lo/hi at fit time

  bool contains(int finger, const Eigen::Vector3d& p) const;
  void validate() const;
};

Workspace fit_workspace(const std::vector<Recording>& recordings,
                        double margin = 0.005);
Workspace fit_workspace(const std::vector<Trajectory>& trajectories,
                        double margin = 0.005);

void save_workspace(const std::filesystem::path& path, const Workspace& w);
Workspace load_workspace(const std::filesystem::path& path);

enum class ObjectShape { cube, cylinder };

const char* to_string(ObjectShape s);
ObjectShape object_shape_from_string(const std::string& s);

struct ObjectModel {
  ObjectShape shape = ObjectShape::cube;
  double cube_edge = 0.05;
  double cylinder_diameter = 0.05;
  double cylinder_height = 0.05;
  double surface_resolution = 0.002;

  void validate() const;
  /// Surface grid in the object frame, spacing <= surface_resolution.
  std::vector<Eigen::Vector3d> sample_surface_local() const;
};

ObjectModel make_object(ObjectShape shape);

std::vector<Eigen::Vector3d> sample_surface(const ObjectModel& m,
                                            const RigidPose& pose);

std::vector<std::array<bool, kNumFingers>> check_reachability(
    const Trajectory& t, const Workspace& w);

struct CollisionReport {
  std::vector<double> min_pairwise_distance;  // per step, meters
  std::vector<bool> flagged;                  // distance < d_min
};

CollisionReport check_collisions(const Trajectory& t, double d_min = 0.005);

struct ContactReport {
  std::vector<int> contact_count;
  std::vector<std::array<bool, kNumFingers>> contact_set;
  std::vector<std::array<double, kNumFingers>> surface_distance;  // meters
};

/// Fingertip-to-surface distances against a brute-force nearest point over
/// the sampled cloud; a finger contacts when its distance <= tau.
ContactReport check_contacts(const Trajectory& t, const ObjectModel& m,
                             double tau = 0.01);

struct ContactTransition {
  int step = 0;  // first step with the new count
  int old_count = 0;
  int new_count = 0;
};

struct Violation {
  std::string kind;  // "reachability" | "collision" | "contact"
  int step = 0;
  int finger = -1;  // -1 when not finger-specific
  double value = 0.0;
  std::string detail;
};

struct VerifyConfig {
  double tau = 0.01;
  double d_min = 0.005;
  int min_contacts = 2;
  void validate() const;
};

struct ConstraintReport {
  std::vector<std::array<bool, kNumFingers>> reachability_ok;
  std::vector<double> min_pairwise_distance;
  std::vector<int> contact_count;
  std::vector<std::array<bool, kNumFingers>> contact_set;
  std::vector<Violation> violations;
  bool gaiting_detected = false;
  std::vector<ContactTransition> transitions;
  VerifyConfig config;

  int n_steps() const { return static_cast<int>(contact_count.size()); }
  bool ok() const { return violations.empty(); }
};

struct GaitingResult {
  bool detected = false;
  std::vector<ContactTransition> transitions;
};

GaitingResult detect_gaiting(const std::vector<int>& contact_count);
GaitingResult detect_gaiting(const ConstraintReport& report);

ConstraintReport verify_trajectory(const Trajectory& t, const ObjectModel& m,
                                   const Workspace& w,
                                   const VerifyConfig& cfg = {});

void save_constraint_report(const std::filesystem::path& path,
                            const ConstraintReport& r);

}  // namespace manip
