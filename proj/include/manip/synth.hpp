#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "manip/geometry.hpp"
#include "manip/preprocess.hpp"
#include "manip/types.hpp"
#include "manip/verify.hpp"

namespace manip {

/// One scripted object motion. Rotations act on roll (x) or pitch (y),
/// translations on the palm-frame y axis; a zero-amount action is a hold.
struct ScriptAction {
  enum class Kind { rotate_x, rotate_y, translate_y };
  Kind kind = Kind::translate_y;
  double amount = 0.0;    // radians or meters
  double duration = 1.0;  // seconds

  static ScriptAction hold(double duration) {
    return {Kind::translate_y, 0.0, duration};
  }
};

const char* to_string(ScriptAction::Kind k);
ScriptAction::Kind action_kind_from_string(const std::string& s);

/// Lift one finger off the object and set it back down at a nearby point on
/// the same face. The lift profile has zero velocity at both ends.
struct GaitEvent {
  double time_s = 0.0;
  int finger = 1;
  double lift_height = 0.04;  // meters, peak
  double duration = 0.4;      // seconds
};

struct ManipulationScript {
  ObjectModel object;
  std::vector<ScriptAction> actions;
  std::vector<GaitEvent> gait_events;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0005;  // meters, fingertip channels only

  double total_duration() const;

  /// Enforces the pose envelope (cumulative |roll|,|pitch| <= 25 deg,
  /// |y| <= 0.12 m), event sanity, and the >= 2 grounded fingers rule.
  void validate() const;
};

/// Resting object pose: centered above the palm origin.
inline RigidPose base_object_pose() {
  RigidPose p;
  p.position = Eigen::Vector3d(0.0, 0.0, 0.06);
  return p;
}

/// Grasp contact points in the object frame, one per finger, with a small
/// seeded jitter along each face's free axis. Spacing stays collision-safe.
std::array<Eigen::Vector3d, kNumFingers> base_contact_points(
    const ObjectModel& m, std::uint64_t seed);

/// Scripted object pose at time t (minimum-jerk ramp per action).
RigidPose object_pose_at(const ManipulationScript& s, double t);

/// Renders the script to a 100 Hz recording: object on its scripted pose,
/// grounded fingertips rigidly attached to their contact points, gaiting
/// fingers on lift/replace arcs, identity palm, seeded fingertip noise.
Recording synthesize(const ManipulationScript& s);

struct Dataset {
  std::vector<Recording> train;
  std::vector<Recording> test;
  std::vector<int> train_indices;  // positions in the input script list
  std::vector<int> test_indices;
  std::string warning;  // non-empty when the split degenerates
};

/// Renders every script and splits the recordings train:test by a seeded
/// shuffle (e.g. 5:1). Rounds the test share down.
Dataset make_dataset(const std::vector<ManipulationScript>& scripts,
                     int train_parts, int test_parts, std::uint64_t seed);

/// Seeded script generator for pipelines: action/undo pairs around the rest
/// pose separated by holds, with gait events placed inside holds.
std::vector<ManipulationScript> random_scripts(const ObjectModel& object,
                                               int n_scripts,
                                               double minutes_each,
                                               std::uint64_t seed);

void save_script(const std::filesystem::path& path,
                 const ManipulationScript& s);
ManipulationScript load_script(const std::filesystem::path& path);

}  // namespace manip
