#pragma once

#include <Eigen/Dense>

#include <limits>

namespace manip {

/// Solver knobs for the operator-splitting QP solver. Defaults are tuned for
/// the activation-fitting problems this project produces; the contract is the
/// KKT tolerance, not the iteration path.
struct QpSettings {
  double rho = 0.1;        // constraint step size (adapted online)
  double sigma = 1e-6;     // proximal regularization
  double alpha = 1.6;      // relaxation
  int max_iters = 200000;
  int check_every = 25;
  // The iteration stops at moderate accuracy and lets the polish reach the
  // KKT tolerance; on a failed polish the target tightens and it resumes.
  double eps_abs = 1e-5;
  double eps_rel = 1e-5;
  double kkt_tol = 1e-6;
  bool adaptive_rho = true;
  bool polish = true;
  int scaling_iters = 10;  // Ruiz equilibration passes; 0 disables scaling
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;   // multipliers; >0 pushes against hi, <0 against lo
  Eigen::VectorXd ax;  // A*x at the solution
  int iterations = 0;
  double kkt_residual = 0.0;
  bool polished = false;
  bool converged = false;
};

/// Stationarity + primal feasibility + sign-aware complementary slackness,
/// measured in the original (unscaled) problem data.
double kkt_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                    const Eigen::MatrixXd& a, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y);

/// Convex QP  min 1/2 x'Px + q'x  s.t.  lo <= Ax <= hi  (P symmetric PSD).
///
/// ADMM in the OSQP splitting with an equality-constrained polish on the
/// active set detected at convergence. Construction precomputes everything
/// that does not depend on q, so one instance can solve many right-hand
/// sides cheaply. solve() is const and safe to call concurrently.
class BoxQp {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  BoxQp(Eigen::MatrixXd p, Eigen::MatrixXd a, Eigen::VectorXd lo,
        Eigen::VectorXd hi, QpSettings settings = {});

  QpResult solve(const Eigen::VectorXd& q) const;
  QpResult solve(const Eigen::VectorXd& q, const Eigen::VectorXd& x_warm,
                 const Eigen::VectorXd& y_warm) const;

  int n_vars() const { return static_cast<int>(p_.rows()); }
  int n_constraints() const { return static_cast<int>(a_.rows()); }

 private:
  QpResult run(const Eigen::VectorXd& q, Eigen::VectorXd x,
               Eigen::VectorXd y) const;
  bool try_polish(const Eigen::VectorXd& q, const Eigen::VectorXd& z_scaled,
                  const Eigen::VectorXd& y_scaled, QpResult* out) const;

  Eigen::MatrixXd p_;
  Eigen::MatrixXd a_;        // original rows
  Eigen::VectorXd lo_, hi_;  // original bounds

  // Ruiz-equilibrated copy the iteration runs on:
  //   P_s = c D P D,  A_s = E A D,  bounds E lo / E hi.
  Eigen::MatrixXd p_s_;
  Eigen::MatrixXd a_s_;
  Eigen::VectorXd lo_s_, hi_s_;
  Eigen::VectorXd row_scale_;  // diagonal of E
  Eigen::VectorXd col_scale_;  // diagonal of D
  double cost_scale_ = 1.0;    // c
  Eigen::MatrixXd ata_;        // A_s' A_s
  QpSettings st_;
  double rho0_;
  Eigen::LLT<Eigen::MatrixXd> llt0_;  // P_s + sigma I + rho0 A_s'A_s
};

}  // namespace manip
