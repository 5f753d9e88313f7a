#include "manip/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "manip/model.hpp"

namespace manip {

Frame Recording::frame(int i) const {
  return Frame::from_features(data.row(i).head<kFrameFeatures>().transpose());
}

RigidPose Recording::palm(int i) const {
  RigidPose p;
  p.position = data.row(i).segment<3>(kFrameFeatures).transpose();
  p.rpy = data.row(i).segment<3>(kFrameFeatures + 3).transpose();
  return p;
}

void Recording::validate() const {
  if (data.cols() != kRecordingChannels)
    throw DimensionMismatch("Recording: expected 27 channels, got " +
                            std::to_string(data.cols()));
  if (missing.size() > 0 &&
      (missing.rows() != data.rows() || missing.cols() != data.cols()))
    throw DimensionMismatch("Recording: mask shape mismatch");
  if (!(dt > 0.0)) throw DimensionMismatch("Recording: dt must be positive");
}

void DemoMatrix::validate() const {
  if (v.rows() != static_cast<Eigen::Index>(kFrameFeatures) * n_steps)
    throw DimensionMismatch("DemoMatrix: row count " + std::to_string(v.rows()) +
                            " does not match n_steps " + std::to_string(n_steps));
  if ((v.array() < 0.0).any())
    throw NonNegativityViolated("DemoMatrix: negative entries");
  if (!segment_sources.empty() &&
      segment_sources.size() != static_cast<std::size_t>(v.cols()))
    throw DimensionMismatch("DemoMatrix: provenance count mismatch");
}

// ---------------------------------------------------------------------------
// Gap filling

namespace {

// Natural cubic spline through (x_i, y_i); x strictly increasing.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    m_.assign(n, 0.0);
    if (n < 3) return;  // degenerates to linear interpolation
    // Tridiagonal solve for second derivatives, natural boundary conditions.
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (int i = 2; i + 1 < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    for (int i = n - 2; i >= 1; --i)
      m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double operator()(double x) const {
    const int n = static_cast<int>(x_.size());
    int j = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    j = std::clamp(j, 0, n - 2);
    const double h = x_[j + 1] - x_[j];
    const double t = (x - x_[j]) / h;
    const double u = 1.0 - t;
    return u * y_[j] + t * y_[j + 1] +
           h * h / 6.0 * (u * (u * u - 1.0) * m_[j] + t * (t * t - 1.0) * m_[j + 1]);
  }

 private:
  std::vector<double> x_, y_;
  std::vector<double> m_;  // second derivatives at the knots
};

struct GapRun {
  int begin = 0;  // first missing sample
  int end = 0;    // one past the last missing sample
};

std::vector<GapRun> gap_runs(const Recording& r, int channel) {
  std::vector<GapRun> runs;
  const int n = r.n_samples();
  int i = 0;
  while (i < n) {
    if (r.missing(i, channel)) {
      GapRun run{i, i + 1};
      while (run.end < n && r.missing(run.end, channel)) ++run.end;
      runs.push_back(run);
      i = run.end;
    } else {
      ++i;
    }
  }
  return runs;
}

}  // namespace

Recording fill_gaps(const Recording& r, double max_gap_s) {
  r.validate();
  if (!r.has_gaps()) return r;
  const int max_run = static_cast<int>(std::floor(max_gap_s / r.dt + 1e-9));
  constexpr int kNeighbors = 8;  // valid samples used on each side of a gap

  Recording out = r;
  const int n = r.n_samples();
  for (int c = 0; c < kRecordingChannels; ++c) {
    for (const GapRun& run : gap_runs(r, c)) {
      const int len = run.end - run.begin;
      if (len > max_run)
        throw GapTooLong("fill_gaps: gap of " + std::to_string(len) +
                         " samples on channel " + std::to_string(c) +
                         " exceeds " + std::to_string(max_run));
      if (run.begin == 0 || run.end == n)
        throw GapTooLong("fill_gaps: gap at recording edge has no neighbors");
      std::vector<double> xs, ys;
      for (int i = run.begin - 1; i >= 0 && static_cast<int>(xs.size()) < kNeighbors; --i) {
        if (!r.missing(i, c)) {
          xs.push_back(i * r.dt);
          ys.push_back(r.data(i, c));
        }
      }
      std::reverse(xs.begin(), xs.end());
      std::reverse(ys.begin(), ys.end());
      for (int i = run.end; i < n && static_cast<int>(xs.size()) < 2 * kNeighbors; ++i) {
        if (!r.missing(i, c)) {
          xs.push_back(i * r.dt);
          ys.push_back(r.data(i, c));
        }
      }
      if (xs.size() < 2)
        throw GapTooLong("fill_gaps: not enough valid neighbors around a gap");
      const CubicSpline spline(xs, ys);
      for (int i = run.begin; i < run.end; ++i) {
        out.data(i, c) = spline(i * r.dt);
        out.missing(i, c) = false;
      }
    }
  }
  if (!out.missing.any()) out.missing.resize(0, 0);
  return out;
}

std::vector<Recording> split_at_long_gaps(const Recording& r, double max_gap_s) {
  r.validate();
  if (!r.has_gaps()) return {r};
  const int max_run = static_cast<int>(std::floor(max_gap_s / r.dt + 1e-9));
  const int n = r.n_samples();

  // A sample is a cut point if any channel has it inside a too-long run.
  std::vector<bool> cut(n, false);
  for (int c = 0; c < kRecordingChannels; ++c)
    for (const GapRun& run : gap_runs(r, c))
      if (run.end - run.begin > max_run)
        for (int i = run.begin; i < run.end; ++i) cut[i] = true;
  // Edge gaps cannot be interpolated either.
  for (int c = 0; c < kRecordingChannels; ++c) {
    for (int i = 0; i < n && r.missing(i, c); ++i) cut[i] = true;
    for (int i = n - 1; i >= 0 && r.missing(i, c); --i) cut[i] = true;
  }

  std::vector<Recording> pieces;
  int i = 0;
  while (i < n) {
    if (cut[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && !cut[j]) ++j;
    Recording piece;
    piece.dt = r.dt;
    piece.data = r.data.middleRows(i, j - i);
    piece.missing = r.missing.middleRows(i, j - i);
    if (!piece.missing.any()) piece.missing.resize(0, 0);
    pieces.push_back(std::move(piece));
    i = j;
  }
  return pieces;
}

// ---------------------------------------------------------------------------
// Palm-frame transform

Recording to_palm_frame(const Recording& r) {
  r.validate();
  if (r.has_gaps())
    throw DegeneratePalmPose("to_palm_frame: fill gaps before transforming");
  Recording out = r;
  for (int i = 0; i < r.n_samples(); ++i) {
    const RigidPose palm = r.palm(i);
    if (!palm.position.allFinite() || !palm.rpy.allFinite())
      throw DegeneratePalmPose("to_palm_frame: palm pose invalid at sample " +
                               std::to_string(i));
    if (palm.is_identity()) continue;
    const Frame f = r.frame(i);
    Frame g;
    for (int fi = 0; fi < kNumFingers; ++fi)
      g.fingertips[fi] = to_frame(palm, f.fingertips[fi]);
    RigidPose obj;
    obj.position = f.object_position;
    obj.rpy = f.object_orientation;
    const RigidPose obj_local = pose_in_frame(palm, obj);
    g.object_position = obj_local.position;
    g.object_orientation = obj_local.rpy;
    out.data.row(i).head<kFrameFeatures>() = g.features().transpose();
    out.data.row(i).tail<kPalmChannels>().setZero();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zero-phase low-pass filter

namespace {

struct Biquad {
  // y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
  double b0, b1, b2, a1, a2;
};

Biquad butterworth2(double cutoff_hz, double fs_hz) {
  // Bilinear transform of the order-2 Butterworth prototype.
  const double k = std::tan(std::numbers::pi * cutoff_hz / fs_hz);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * k + k * k);
  Biquad f;
  f.b0 = k * k * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k * k - 1.0) * norm;
  f.a2 = (1.0 - q * k + k * k) * norm;
  // Pin the DC gain to exactly 1.
  const double dc = (f.b0 + f.b1 + f.b2) / (1.0 + f.a1 + f.a2);
  f.b0 /= dc;
  f.b1 /= dc;
  f.b2 /= dc;
  return f;
}

// Direct-form II transposed, states initialized to the steady state for the
// first input value so constant signals pass through untouched.
std::vector<double> run_filter(const Biquad& f, const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> y(n);
  if (n == 0) return y;
  // With DC gain 1, a constant input x0 has states s1=(1-b0)x0, s2=(b2-a2)x0.
  double s1 = (1.0 - f.b0) * x[0];
  double s2 = (f.b2 - f.a2) * x[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = f.b0 * xi + s1;
    s1 = f.b1 * xi - f.a1 * yi + s2;
    s2 = f.b2 * xi - f.a2 * yi;
    y[i] = yi;
  }
  return y;
}

// Forward-backward pass with odd reflection padding at both ends.
std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x,
                             int pad) {
  const int n = static_cast<int>(x.size());
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<double> y = run_filter(f, ext);
  std::reverse(y.begin(), y.end());
  y = run_filter(f, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + pad, y.begin() + pad + n};
}

}  // namespace

Recording lowpass(const Recording& r, double cutoff_hz) {
  r.validate();
  const double fs = 1.0 / r.dt;
  if (!(cutoff_hz > 0.0) || cutoff_hz >= fs / 2.0)
    throw InvalidCutoff("lowpass: cutoff " + std::to_string(cutoff_hz) +
                        " Hz outside (0, " + std::to_string(fs / 2.0) + ")");
  if (r.has_gaps()) throw GapTooLong("lowpass: fill gaps before filtering");
  const Biquad f = butterworth2(cutoff_hz, fs);
  const int pad = std::max(9, static_cast<int>(std::lround(3.0 * fs / cutoff_hz)));

  Recording out = r;
  std::vector<double> chan(r.n_samples());
  for (int c = 0; c < kRecordingChannels; ++c) {
    for (int i = 0; i < r.n_samples(); ++i) chan[i] = r.data(i, c);
    const auto filtered = filtfilt(f, chan, pad);
    for (int i = 0; i < r.n_samples(); ++i) out.data(i, c) = filtered[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation

DemoMatrix segment(const Recording& r, const OffsetSpec& s,
                   const std::string& source_name) {
  r.validate();
  if (r.has_gaps()) throw GapTooLong("segment: recording still has gaps");
  const int n_windows = r.n_samples() / kStepsPerSegment;
  DemoMatrix m;
  m.offsets = s;
  m.n_steps = kStepsPerSegment;
  m.v.resize(static_cast<Eigen::Index>(kFrameFeatures) * kStepsPerSegment, n_windows);
  for (int wnd = 0; wnd < n_windows; ++wnd) {
    Trajectory t;
    t.dt = r.dt;
    t.rep = Representation::physical;
    t.frames.reserve(kStepsPerSegment);
    for (int k = 0; k < kStepsPerSegment; ++k)
      t.frames.push_back(r.frame(wnd * kStepsPerSegment + k));
    m.v.col(wnd) = flatten(apply_offset(t, s));
    m.segment_sources.push_back({source_name, wnd * kStepsPerSegment});
  }
  m.validate();
  return m;
}

DemoMatrix concat(const std::vector<DemoMatrix>& parts) {
  if (parts.empty()) throw DimensionMismatch("concat: no demo matrices");
  DemoMatrix out;
  out.offsets = parts.front().offsets;
  out.n_steps = parts.front().n_steps;
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.n_steps != out.n_steps ||
        p.offsets.position_offset != out.offsets.position_offset ||
        p.offsets.orientation_offset != out.offsets.orientation_offset)
      throw DimensionMismatch("concat: demo matrices disagree on layout");
    cols += p.v.cols();
  }
  out.v.resize(parts.front().v.rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.v.middleCols(at, p.v.cols()) = p.v;
    at += p.v.cols();
    out.segment_sources.insert(out.segment_sources.end(), p.segment_sources.begin(),
                               p.segment_sources.end());
  }
  out.validate();
  return out;
}

}  // namespace manip
