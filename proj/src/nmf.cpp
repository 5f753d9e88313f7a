#include "manip/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace manip {

namespace {

constexpr double kDenomFloor = 1e-12;

// Hand-rolled uniform in (0, scale] so results are reproducible across
// standard libraries.
class UniformPositive {
 public:
  explicit UniformPositive(std::uint64_t seed) : rng_(seed) {}
  double next(double scale) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // [0,1)
    return scale * (1.0 - u);  // (0, scale]
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

NmfFactors nmf_multiplicative(const Eigen::MatrixXd& v, int n_primitives,
                              int max_iters, double rel_tol, std::uint64_t seed,
                              double init_scale) {
  const Eigen::Index n = v.rows(), m = v.cols();
  const int l = n_primitives;
  if (l < 1) throw RankTooLarge("nmf: need at least one primitive");
  if ((v.array() < 0.0).any())
    throw NonNegativityViolated("nmf: input matrix has negative entries");

  double scale = init_scale;
  if (!(scale > 0.0))
    scale = std::max(2.0 * std::sqrt(std::max(v.mean(), 0.0) / l), 1e-6);

  NmfFactors out;
  out.w.resize(n, l);
  out.h.resize(l, m);
  UniformPositive rng(seed);
  for (Eigen::Index j = 0; j < l; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out.w(i, j) = rng.next(scale);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < l; ++i) out.h(i, j) = rng.next(scale);

  Eigen::MatrixXd wt_v(l, m), wt_w(l, l), den_h(l, m);
  Eigen::MatrixXd v_ht(n, l), h_ht(l, l), den_w(n, l);
  Eigen::MatrixXd residual(n, m);

  auto objective = [&]() {
    residual.noalias() = v - out.w * out.h;
    return residual.norm();
  };

  out.objective_trace.push_back(objective());
  for (int it = 0; it < max_iters; ++it) {
    // H <- H .* (W'V) ./ (W'W H)
    wt_v.noalias() = out.w.transpose() * v;
    wt_w.noalias() = out.w.transpose() * out.w;
    den_h.noalias() = wt_w * out.h;
    out.h = out.h.cwiseProduct(wt_v).cwiseQuotient(den_h.cwiseMax(kDenomFloor));

    // W <- W .* (V H') ./ (W H H')
    v_ht.noalias() = v * out.h.transpose();
    h_ht.noalias() = out.h * out.h.transpose();
    den_w.noalias() = out.w * h_ht;
    out.w = out.w.cwiseProduct(v_ht).cwiseQuotient(den_w.cwiseMax(kDenomFloor));

    const double prev = out.objective_trace.back();
    const double obj = objective();
    out.objective_trace.push_back(obj);
    out.iterations = it + 1;
    if (std::abs(prev - obj) <= rel_tol * std::max(prev, kDenomFloor)) break;
  }
  return out;
}

NmfResult nmf_factorize(const DemoMatrix& v, const NmfConfig& cfg) {
  v.validate();
  const Eigen::Index m = v.v.cols();
  if (cfg.n_primitives >= m)
    throw RankTooLarge("nmf_factorize: need more demonstrations (" +
                       std::to_string(m) + ") than primitives (" +
                       std::to_string(cfg.n_primitives) + ")");
  NmfFactors f = nmf_multiplicative(v.v, cfg.n_primitives, cfg.max_iters,
                                    cfg.rel_tol, cfg.rng_seed, cfg.init_scale);
  NmfResult res;
  res.dictionary.w = std::move(f.w);
  res.dictionary.n_steps = v.n_steps;
  res.dictionary.n_primitives = cfg.n_primitives;
  res.dictionary.offsets = v.offsets;
  res.dictionary.provenance = {cfg.object_label, cfg.rng_seed, f.iterations,
                               f.objective_trace.back()};
  res.activations = std::move(f.h);
  res.objective_trace = std::move(f.objective_trace);
  return res;
}

// ---------------------------------------------------------------------------
// Error reporting

namespace {

ErrorTable::MeanStd mean_std(const std::vector<double>& xs) {
  ErrorTable::MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / xs.size();
  double sq = 0.0;
  for (double x : xs) sq += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(sq / xs.size());
  return out;
}

}  // namespace

ErrorTable make_error_table(const Eigen::MatrixXd& original,
                            const Eigen::MatrixXd& recreated, int n_steps) {
  if (original.rows() != recreated.rows() || original.cols() != recreated.cols())
    throw DimensionMismatch("make_error_table: shape mismatch");
  if (original.rows() != static_cast<Eigen::Index>(kFrameFeatures) * n_steps)
    throw DimensionMismatch("make_error_table: rows do not match n_steps");

  // Differences are identical in offset and physical representation, so the
  // table can be built directly from the stacked columns.
  std::array<std::vector<double>, kNumFingers> finger;
  std::vector<double> translation;
  std::array<std::vector<double>, 3> orientation;
  const Eigen::MatrixXd diff = recreated - original;
  for (Eigen::Index col = 0; col < diff.cols(); ++col) {
    for (int k = 0; k < n_steps; ++k) {
      const auto frame = diff.col(col).segment<kFrameFeatures>(kFrameFeatures * k);
      for (int fi = 0; fi < kNumFingers; ++fi)
        finger[fi].push_back(frame.segment<3>(3 * fi).norm() * 1000.0);
      translation.push_back(frame.segment<3>(kFingerFeatures).norm() * 1000.0);
      for (int a = 0; a < 3; ++a)
        orientation[a].push_back(frame[kFingerFeatures + 3 + a]);
    }
  }
  ErrorTable t;
  for (int fi = 0; fi < kNumFingers; ++fi) t.finger_mm[fi] = mean_std(finger[fi]);
  t.object_translation_mm = mean_std(translation);
  for (int a = 0; a < 3; ++a) t.object_orientation_rad[a] = mean_std(orientation[a]);
  return t;
}

ErrorTable reconstruction_report(const NmfResult& res, const DemoMatrix& v) {
  if (res.activations.cols() != v.v.cols() ||
      res.dictionary.w.rows() != v.v.rows())
    throw DimensionMismatch("reconstruction_report: dimensions disagree");
  return make_error_table(v.v, res.dictionary.w * res.activations, v.n_steps);
}

std::string render_error_table(const ErrorTable& t, const std::string& title) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const ErrorTable::MeanStd& ms,
                 const char* unit) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-12s %.4f ± %.4f (%s)\n",
                  name.c_str(), ms.mean, ms.stddev, unit);
    out << buf;
  };
  out << title << "\n";
  out << "Fingers\n";
  for (int fi = 0; fi < kNumFingers; ++fi) {
    std::string name = kFingerNames[fi];
    name[0] = static_cast<char>(std::toupper(name[0]));
    row(name, t.finger_mm[fi], "mm");
  }
  out << "Object\n";
  row("Translation", t.object_translation_mm, "mm");
  row("Roll", t.object_orientation_rad[0], "rad");
  row("Pitch", t.object_orientation_rad[1], "rad");
  row("Yaw", t.object_orientation_rad[2], "rad");
  return out.str();
}

}  // namespace manip
