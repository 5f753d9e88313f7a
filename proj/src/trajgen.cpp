#include "manip/trajgen.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "manip/model.hpp"

namespace manip {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

void VelocityBounds::validate() const {
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  for (const auto& o : per_finger)
    if (o && !(*o > 0.0))
      throw std::invalid_argument("per-finger speed limit must be positive");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::ok: return "ok";
    case SolveStatus::velocity_clipped: return "velocity_clipped";
  }
  return "unknown";
}

EndpointSolver::EndpointSolver(EndpointProblem problem, double lambda,
                               QpSettings settings)
    : prob_(std::move(problem)), lambda_(lambda) {
  if (prob_.n_steps < 2) throw DimensionMismatch("need at least 2 steps");
  if (prob_.features_per_step < 1)
    throw DimensionMismatch("features_per_step must be positive");
  if (prob_.bounded_rows < 0 || prob_.bounded_rows > prob_.features_per_step)
    throw DimensionMismatch("bounded_rows out of range");
  if (prob_.basis.rows() !=
      static_cast<Eigen::Index>(prob_.n_steps) * prob_.features_per_step)
    throw DimensionMismatch("basis rows do not match steps * features");
  if (prob_.row_limits.size() != prob_.bounded_rows)
    throw DimensionMismatch("row_limits size mismatch");
  if (!(prob_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(lambda_ > 0.0)) throw std::invalid_argument("lambda must be positive");

  const Eigen::Index fps = prob_.features_per_step;
  const Eigen::Index l = prob_.basis.cols();
  b1_ = prob_.basis.topRows(fps);
  bn_ = prob_.basis.bottomRows(fps);

  Eigen::MatrixXd p = 2.0 * (b1_.transpose() * b1_ +
                             lambda_ * bn_.transpose() * bn_);

  std::vector<Eigen::Index> bounded;
  for (Eigen::Index r = 0; r < prob_.bounded_rows; ++r)
    if (std::isfinite(prob_.row_limits(r))) bounded.push_back(r);

  const Eigen::Index n_vel =
      static_cast<Eigen::Index>(bounded.size()) * (prob_.n_steps - 1);
  Eigen::MatrixXd a(l + n_vel, l);
  Eigen::VectorXd lo(l + n_vel), hi(l + n_vel);
  a.topRows(l) = Eigen::MatrixXd::Identity(l, l);
  lo.head(l).setZero();
  hi.head(l).setConstant(BoxQp::kInf);
  Eigen::Index row = l;
  for (int k = 0; k + 1 < prob_.n_steps; ++k) {
    for (const Eigen::Index r : bounded) {
      a.row(row) = prob_.basis.row((k + 1) * fps + r) -
                   prob_.basis.row(k * fps + r);
      const double b = prob_.row_limits(r) * prob_.dt;
      lo(row) = -b;
      hi(row) = b;
      ++row;
    }
  }
  qp_ = std::make_unique<BoxQp>(std::move(p), std::move(a), std::move(lo),
                                std::move(hi), settings);
}

EndpointSolution EndpointSolver::solve(const Eigen::VectorXd& p1,
                                       const Eigen::VectorXd& pn) {
  if (p1.size() != prob_.features_per_step ||
      pn.size() != prob_.features_per_step)
    throw DimensionMismatch("endpoint target size mismatch");
  const auto t0 = std::chrono::steady_clock::now();

  const Eigen::VectorXd q =
      -2.0 * (b1_.transpose() * p1 + lambda_ * (bn_.transpose() * pn));
  QpResult r = have_warm_ ? qp_->solve(q, warm_x_, warm_y_) : qp_->solve(q);
  if (!r.converged)
    throw std::runtime_error("activation solve did not converge (KKT " +
                             std::to_string(r.kkt_residual) + ")");
  warm_x_ = r.x;
  warm_y_ = r.y;
  have_warm_ = true;

  const Eigen::Index l = prob_.basis.cols();
  ActivationVector h = r.x.cwiseMax(0.0);

  // Displacement rows are homogeneous in h, so uniform shrinking restores
  // feasibility if numerical slack was ever exceeded; in practice the
  // polished solution already satisfies the bounds to machine precision.
  bool clipped = false;
  if (qp_->n_constraints() > l) {
    std::vector<Eigen::Index> bounded;
    for (Eigen::Index rr = 0; rr < prob_.bounded_rows; ++rr)
      if (std::isfinite(prob_.row_limits(rr))) bounded.push_back(rr);
    const Eigen::Index fps = prob_.features_per_step;
    double shrink = 1.0;
    Eigen::Index vi = 0;
    for (int k = 0; k + 1 < prob_.n_steps; ++k) {
      for (const Eigen::Index rr : bounded) {
        const double g = (prob_.basis.row((k + 1) * fps + rr) -
                          prob_.basis.row(k * fps + rr))
                             .dot(h);
        const double b = prob_.row_limits(rr) * prob_.dt;
        if (std::abs(g) > b) shrink = std::min(shrink, b / std::abs(g));
        const double y_row = r.y(l + vi);
        if (std::abs(y_row) > 1e-8 && std::abs(g) >= b - 1e-9) clipped = true;
        ++vi;
      }
    }
    if (shrink < 1.0) h *= shrink;
  }

  EndpointSolution sol;
  sol.h = std::move(h);
  sol.initial_residual = b1_ * sol.h - p1;
  sol.final_residual = bn_ * sol.h - pn;
  sol.stats.iterations = r.iterations;
  sol.stats.kkt_residual = r.kkt_residual;
  sol.stats.polished = r.polished;
  sol.stats.status =
      clipped ? SolveStatus::velocity_clipped : SolveStatus::ok;
  const auto t1 = std::chrono::steady_clock::now();
  sol.stats.wall_time_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return sol;
}

EndpointProblem make_endpoint_problem(const Dictionary& d,
                                      const VelocityBounds& bounds) {
  d.validate();
  bounds.validate();
  EndpointProblem p;
  p.basis = d.w;
  p.n_steps = d.n_steps;
  p.features_per_step = kFrameFeatures;
  p.bounded_rows = kFingerFeatures;
  p.dt = kDefaultDt;
  p.row_limits.resize(kFingerFeatures);
  for (int r = 0; r < kFingerFeatures; ++r)
    p.row_limits(r) = bounds.limit(r / 3);
  return p;
}

TrajectoryGenerator::TrajectoryGenerator(const Dictionary& d, double lambda,
                                         VelocityBounds bounds)
    : dict_(d),
      bounds_(bounds),
      solver_(make_endpoint_problem(d, bounds), lambda) {}

GenerationResult TrajectoryGenerator::generate(const Frame& initial,
                                               const Frame& final) {
  const Eigen::VectorXd p1 = apply_offset(initial, dict_.offsets).features();
  const Eigen::VectorXd pn = apply_offset(final, dict_.offsets).features();
  EndpointSolution sol = solver_.solve(p1, pn);

  GenerationResult res;
  res.h = std::move(sol.h);
  res.trajectory = remove_offset(reconstruct(dict_, res.h), dict_.offsets);
  res.initial_residual = std::move(sol.initial_residual);
  res.final_residual = std::move(sol.final_residual);
  res.solve_stats = sol.stats;
  return res;
}

GenerationResult generate(const Dictionary& d, const GenerationRequest& req) {
  TrajectoryGenerator g(d, req.lambda, req.velocity_bounds);
  return g.generate(req.initial, req.final);
}

PoseError endpoint_error(const GenerationResult& res,
                         const GenerationRequest& req) {
  if (res.trajectory.frames.empty())
    throw DimensionMismatch("empty trajectory");
  const Frame& achieved = res.trajectory.frames.back();
  PoseError e;
  e.translation_mm =
      (achieved.object_position - req.final.object_position) * 1000.0;
  for (int i = 0; i < 3; ++i)
    e.rotation_deg(i) =
        wrap_pi(achieved.object_orientation(i) -
                req.final.object_orientation(i)) *
        (180.0 / kPi);
  return e;
}

}  // namespace manip
