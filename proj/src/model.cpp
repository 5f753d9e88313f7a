#include "manip/model.hpp"

#include <string>

namespace manip {

Eigen::Matrix<double, kFrameFeatures, 1> Frame::features() const {
  Eigen::Matrix<double, kFrameFeatures, 1> f;
  for (int i = 0; i < kNumFingers; ++i) f.segment<3>(3 * i) = fingertips[i];
  f.segment<3>(kFingerFeatures) = object_position;
  f.segment<3>(kFingerFeatures + 3) = object_orientation;
  return f;
}

Frame Frame::from_features(const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (f.size() != kFrameFeatures)
    throw DimensionMismatch("Frame::from_features: expected 21 features, got " +
                            std::to_string(f.size()));
  Frame out;
  for (int i = 0; i < kNumFingers; ++i) out.fingertips[i] = f.segment<3>(3 * i);
  out.object_position = f.segment<3>(kFingerFeatures);
  out.object_orientation = f.segment<3>(kFingerFeatures + 3);
  return out;
}

void Trajectory::validate() const {
  if (frames.size() < 2)
    throw DimensionMismatch("Trajectory: need at least 2 frames, got " +
                            std::to_string(frames.size()));
  if (!(dt > 0.0)) throw DimensionMismatch("Trajectory: dt must be positive");
}

Eigen::MatrixXd Dictionary::frame_block(int k) const {
  if (k < 1 || k > n_steps)
    throw DimensionMismatch("Dictionary::frame_block: k out of range");
  return w.middleRows(kFrameFeatures * (k - 1), kFrameFeatures);
}

void Dictionary::validate() const {
  if (n_steps < 1 || n_primitives < 1)
    throw DimensionMismatch("Dictionary: empty shape");
  if (w.rows() != static_cast<Eigen::Index>(kFrameFeatures) * n_steps ||
      w.cols() != n_primitives)
    throw DimensionMismatch("Dictionary: matrix is " + std::to_string(w.rows()) +
                            "x" + std::to_string(w.cols()) + ", expected " +
                            std::to_string(kFrameFeatures * n_steps) + "x" +
                            std::to_string(n_primitives));
  if ((w.array() < 0.0).any())
    throw NonNegativityViolated("Dictionary: negative entries");
}

Eigen::VectorXd flatten(const Trajectory& t) {
  const int n = t.n_steps();
  Eigen::VectorXd v(static_cast<Eigen::Index>(kFrameFeatures) * n);
  for (int k = 0; k < n; ++k)
    v.segment<kFrameFeatures>(kFrameFeatures * k) = t.frames[k].features();
  return v;
}

Trajectory unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, double dt,
                     Representation rep) {
  if (v.size() == 0 || v.size() % kFrameFeatures != 0)
    throw DimensionMismatch("unflatten: length " + std::to_string(v.size()) +
                            " is not a positive multiple of 21");
  Trajectory t;
  t.dt = dt;
  t.rep = rep;
  const int n = static_cast<int>(v.size()) / kFrameFeatures;
  t.frames.reserve(n);
  for (int k = 0; k < n; ++k)
    t.frames.push_back(Frame::from_features(v.segment<kFrameFeatures>(kFrameFeatures * k)));
  return t;
}

Eigen::VectorXd offset_pattern(int n_steps, const OffsetSpec& s) {
  Eigen::VectorXd frame = Eigen::VectorXd::Constant(kFrameFeatures, s.position_offset);
  frame.tail<3>().setConstant(s.orientation_offset);
  Eigen::VectorXd v(static_cast<Eigen::Index>(kFrameFeatures) * n_steps);
  for (int k = 0; k < n_steps; ++k) v.segment<kFrameFeatures>(kFrameFeatures * k) = frame;
  return v;
}

namespace {

Frame shift_frame(const Frame& f, const OffsetSpec& s, double sign) {
  Frame out = f;
  const Eigen::Vector3d dp = Eigen::Vector3d::Constant(sign * s.position_offset);
  for (auto& p : out.fingertips) p += dp;
  out.object_position += dp;
  out.object_orientation.array() += sign * s.orientation_offset;
  return out;
}

}  // namespace

Frame apply_offset(const Frame& f, const OffsetSpec& s) {
  Frame out = shift_frame(f, s, +1.0);
  if ((out.features().array() < 0.0).any())
    throw OffsetInsufficient("apply_offset: a shifted feature is negative");
  return out;
}

Frame remove_offset(const Frame& f, const OffsetSpec& s) {
  return shift_frame(f, s, -1.0);
}

Trajectory apply_offset(const Trajectory& t, const OffsetSpec& s) {
  Trajectory out;
  out.dt = t.dt;
  out.rep = Representation::offset;
  out.frames.reserve(t.frames.size());
  for (const auto& f : t.frames) out.frames.push_back(apply_offset(f, s));
  return out;
}

Trajectory remove_offset(const Trajectory& t, const OffsetSpec& s) {
  Trajectory out;
  out.dt = t.dt;
  out.rep = Representation::physical;
  out.frames.reserve(t.frames.size());
  for (const auto& f : t.frames) out.frames.push_back(remove_offset(f, s));
  return out;
}

Eigen::VectorXd activate(const Eigen::Ref<const Eigen::MatrixXd>& w,
                         const Eigen::Ref<const Eigen::VectorXd>& h) {
  if (w.cols() != h.size())
    throw DimensionMismatch("activate: " + std::to_string(w.cols()) +
                            " primitives vs " + std::to_string(h.size()) +
                            " weights");
  return w * h;
}

Trajectory reconstruct(const Dictionary& d, const ActivationVector& h) {
  if (h.size() != d.n_primitives)
    throw DimensionMismatch("reconstruct: activation length " +
                            std::to_string(h.size()) + " vs " +
                            std::to_string(d.n_primitives) + " primitives");
  return unflatten(d.w * h, kDefaultDt, Representation::offset);
}

}  // namespace manip
