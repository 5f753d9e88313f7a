#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace manip {

inline constexpr int kNumFingers = 5;
inline constexpr int kFingerFeatures = 3 * kNumFingers;  // 15 fingertip coordinates
inline constexpr int kFrameFeatures = kFingerFeatures + 6;  // + object pose = 21
inline constexpr double kSampleRateHz = 100.0;
inline constexpr double kDefaultDt = 1.0 / kSampleRateHz;
inline constexpr int kStepsPerSegment = 100;  // 1 s at 100 Hz

/// Finger order is fixed everywhere: thumb, index, middle, ring, little.
inline const std::array<std::string, kNumFingers> kFingerNames = {
    "thumb", "index", "middle", "ring", "little"};

// ---------------------------------------------------------------------------
// Errors

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OffsetInsufficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GapTooLong : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidCutoff : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegeneratePalmPose : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RankTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonNegativityViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ScriptInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Core data model

/// Physical data lives in SI units relative to the palm frame; the offset
/// representation shifts every feature so it is non-negative, which the
/// factorization requires.
enum class Representation { physical, offset };

/// Shift applied to make every feature non-negative: positions (fingertips
/// and object translation) get position_offset, object Euler angles get
/// orientation_offset. Applying then removing the offset is the identity.
struct OffsetSpec {
  double position_offset = 0.8;                       // meters
  double orientation_offset = 2.0 * std::numbers::pi;  // radians
};

/// One time step: five fingertip positions plus the object 6-DoF pose,
/// 21 scalar features total. Orientation is roll/pitch/yaw in radians
/// (intrinsic z-y'-x'' convention, shared by every producer and consumer).
struct Frame {
  std::array<Eigen::Vector3d, kNumFingers> fingertips{
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  Eigen::Vector3d object_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d object_orientation = Eigen::Vector3d::Zero();  // roll, pitch, yaw

  /// Feature vector in the canonical order: thumb xyz .. little xyz,
  /// object xyz, object roll/pitch/yaw.
  Eigen::Matrix<double, kFrameFeatures, 1> features() const;
  static Frame from_features(const Eigen::Ref<const Eigen::VectorXd>& f);
};

/// N consecutive frames with a fixed time step. All frames share one
/// representation tag.
struct Trajectory {
  std::vector<Frame> frames;
  double dt = kDefaultDt;
  Representation rep = Representation::physical;

  int n_steps() const { return static_cast<int>(frames.size()); }

  /// N >= 2, dt > 0.
  void validate() const;
};

/// Non-negative weights combining primitives; length matches the
/// dictionary's primitive count.
using ActivationVector = Eigen::VectorXd;

struct DictionaryProvenance {
  std::string object;  // "cube", "cylinder" or free-form label
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_residual = 0.0;
};

/// Learned primitive dictionary: a dense non-negative matrix with one
/// column per primitive and 21 rows per time step, frame-major.
struct Dictionary {
  Eigen::MatrixXd w;  // (21 * n_steps) x n_primitives, entrywise >= 0
  int n_steps = 0;
  int n_primitives = 0;
  OffsetSpec offsets;
  DictionaryProvenance provenance;

  /// Rows of the k-th frame block (k in [1, n_steps], 21 x n_primitives).
  Eigen::MatrixXd frame_block(int k) const;

  /// Shape consistency and entrywise non-negativity.
  void validate() const;
};

}  // namespace manip
