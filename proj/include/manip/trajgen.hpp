#pragma once

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <memory>
#include <optional>

#include "manip/qp.hpp"
#include "manip/types.hpp"

namespace manip {

/// Per-axis fingertip speed limits in m/s. A limit of +infinity disables the
/// corresponding rows entirely.
struct VelocityBounds {
  double v_max = 0.5;
  std::array<std::optional<double>, kNumFingers> per_finger{};

  double limit(int finger) const {
    const auto& o = per_finger[static_cast<std::size_t>(finger)];
    return o ? *o : v_max;
  }
  bool any_finite() const {
    for (int f = 0; f < kNumFingers; ++f)
      if (std::isfinite(limit(f))) return true;
    return false;
  }
  static VelocityBounds unbounded() {
    VelocityBounds b;
    b.v_max = std::numeric_limits<double>::infinity();
    return b;
  }
  void validate() const;
};

struct GenerationRequest {
  Frame initial;  // physical representation
  Frame final;    // physical representation
  double lambda = 1.0;
  VelocityBounds velocity_bounds{};
};

enum class SolveStatus { ok, velocity_clipped };

struct SolveStats {
  int iterations = 0;
  double kkt_residual = 0.0;
  double wall_time_ms = 0.0;
  bool polished = false;
  SolveStatus status = SolveStatus::ok;
};

const char* to_string(SolveStatus s);

struct GenerationResult {
  ActivationVector h;
  Trajectory trajectory;  // physical representation
  Eigen::VectorXd initial_residual;  // W(1)h - p1, offset feature units
  Eigen::VectorXd final_residual;    // W(N)h - pN
  SolveStats solve_stats;
};

/// Signed endpoint pose error of the achieved final frame against the
/// requested one: translation in millimeters, rotation in degrees.
struct PoseError {
  Eigen::Vector3d translation_mm;
  Eigen::Vector3d rotation_deg;
};

PoseError endpoint_error(const GenerationResult& res,
                         const GenerationRequest& req);

/// Dimension-generic endpoint fit: given a basis whose columns are flattened
/// step sequences (features_per_step rows per step), find h >= 0 minimizing
/// ||B(1)h - p1||^2 + lambda ||B(n)h - pn||^2 with per-sample displacement
/// bounds on the first `bounded_rows` features of each step.
struct EndpointProblem {
  Eigen::MatrixXd basis;  // (features_per_step * n_steps) x l
  int n_steps = 0;
  int features_per_step = 0;
  int bounded_rows = 0;           // leading features subject to speed limits
  double dt = kDefaultDt;
  Eigen::VectorXd row_limits;     // size bounded_rows, m/s, +inf to disable
};

struct EndpointSolution {
  ActivationVector h;
  Eigen::VectorXd initial_residual;
  Eigen::VectorXd final_residual;
  SolveStats stats;
};

/// The endpoint problem a dictionary induces: 21 features per step, speed
/// limits on the 15 fingertip rows.
EndpointProblem make_endpoint_problem(const Dictionary& d,
                                      const VelocityBounds& bounds);

class EndpointSolver {
 public:
  explicit EndpointSolver(EndpointProblem problem, double lambda = 1.0,
                          QpSettings settings = {});

  /// Warm-started; safe to call repeatedly with different targets.
  EndpointSolution solve(const Eigen::VectorXd& p1, const Eigen::VectorXd& pn);

  const EndpointProblem& problem() const { return prob_; }
  double lambda() const { return lambda_; }

 private:
  EndpointProblem prob_;
  double lambda_;
  Eigen::MatrixXd b1_, bn_;  // endpoint blocks
  std::unique_ptr<BoxQp> qp_;
  Eigen::VectorXd warm_x_, warm_y_;
  bool have_warm_ = false;
};

/// Binds a dictionary + request shape once so many requests can reuse the
/// factorization and warm starts (one instance per thread).
class TrajectoryGenerator {
 public:
  TrajectoryGenerator(const Dictionary& d, double lambda = 1.0,
                      VelocityBounds bounds = {});

  GenerationResult generate(const Frame& initial, const Frame& final);

  const Dictionary& dictionary() const { return dict_; }

 private:
  Dictionary dict_;
  VelocityBounds bounds_;
  EndpointSolver solver_;
};

GenerationResult generate(const Dictionary& d, const GenerationRequest& req);

}  // namespace manip
