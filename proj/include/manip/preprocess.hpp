#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "manip/geometry.hpp"
#include "manip/types.hpp"

namespace manip {

inline constexpr int kPalmChannels = 6;
inline constexpr int kRecordingChannels = kFrameFeatures + kPalmChannels;  // 27

/// Raw demonstration time series at 100 Hz: the 21 trajectory features plus
/// the palm pose (x,y,z,roll,pitch,yaw), world frame. `missing` marks samples
/// lost by the capture process.
struct Recording {
  Eigen::MatrixXd data;  // n_samples x 27, column layout as in the CSV
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;  // same shape
  double dt = kDefaultDt;

  int n_samples() const { return static_cast<int>(data.rows()); }
  bool has_gaps() const { return missing.size() > 0 && missing.any(); }

  Frame frame(int i) const;
  RigidPose palm(int i) const;

  /// Shape consistency; missing may be empty (no gaps).
  void validate() const;
};

/// Training matrix: one offset, flattened 1-second window per column.
struct DemoMatrix {
  Eigen::MatrixXd v;  // (21 * n_steps) x m, entrywise >= 0
  OffsetSpec offsets;
  int n_steps = kStepsPerSegment;

  struct SegmentSource {
    std::string recording;
    int start_sample = 0;
  };
  std::vector<SegmentSource> segment_sources;

  int n_segments() const { return static_cast<int>(v.cols()); }
  void validate() const;
};

/// Replaces missing samples with a cubic spline through the nearest valid
/// neighbors on each side. Gap runs longer than max_gap_s throw GapTooLong;
/// leading/trailing gaps cannot be interpolated and also throw.
Recording fill_gaps(const Recording& r, double max_gap_s = 0.2);

/// Splits a recording at gap runs longer than max_gap_s (and at missing
/// edges), returning pieces whose remaining gaps are all interpolable.
std::vector<Recording> split_at_long_gaps(const Recording& r, double max_gap_s = 0.2);

/// Expresses fingertip positions and the object pose relative to the palm
/// pose at the same sample; the palm channels become identity.
Recording to_palm_frame(const Recording& r);

/// Zero-phase second-order Butterworth low-pass (forward-backward) applied
/// to every scalar channel. DC gain is exactly 1. cutoff must lie in
/// (0, Nyquist).
Recording lowpass(const Recording& r, double cutoff_hz);

/// Cuts the recording into non-overlapping 1-second windows, offsets each
/// window and stacks it as one column; the trailing remainder is discarded.
/// Expects a gap-free recording in the palm frame.
DemoMatrix segment(const Recording& r, const OffsetSpec& s,
                   const std::string& source_name = "");

/// Column-wise concatenation; all inputs must share offsets and n_steps.
DemoMatrix concat(const std::vector<DemoMatrix>& parts);

}  // namespace manip
