#include "manip/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace manip {

namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& v,
                             const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

double kkt_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                    const Eigen::MatrixXd& a, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y) {
  const Eigen::VectorXd ax = a * x;
  double stat = inf_norm(p * x + q + a.transpose() * y);
  double prim = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    prim = std::max(prim, lo(i) - ax(i));
    prim = std::max(prim, ax(i) - hi(i));
    if (y(i) > 0.0) {
      // Multiplier pushes against the upper bound; it must vanish unless the
      // upper slack does.
      const double slack = std::max(hi(i) - ax(i), 0.0);
      comp = std::max(comp, std::min(y(i), slack));
    } else if (y(i) < 0.0) {
      const double slack = std::max(ax(i) - lo(i), 0.0);
      comp = std::max(comp, std::min(-y(i), slack));
    }
  }
  return std::max({stat, std::max(prim, 0.0), comp});
}

BoxQp::BoxQp(Eigen::MatrixXd p, Eigen::MatrixXd a, Eigen::VectorXd lo,
             Eigen::VectorXd hi, QpSettings settings)
    : p_(std::move(p)),
      a_(std::move(a)),
      lo_(std::move(lo)),
      hi_(std::move(hi)),
      st_(settings) {
  if (p_.rows() != p_.cols()) throw std::invalid_argument("BoxQp: P not square");
  if (a_.cols() != p_.rows()) throw std::invalid_argument("BoxQp: A/P mismatch");
  if (a_.rows() == 0) throw std::invalid_argument("BoxQp: no constraints");
  if (lo_.size() != a_.rows() || hi_.size() != a_.rows())
    throw std::invalid_argument("BoxQp: bound size mismatch");
  for (Eigen::Index i = 0; i < a_.rows(); ++i) {
    if (!(lo_(i) <= hi_(i)))
      throw std::invalid_argument("BoxQp: empty constraint interval");
  }

  const Eigen::Index n = p_.rows();
  const Eigen::Index m = a_.rows();

  // Ruiz equilibration on [P A'; A 0] plus cost normalization. Constraint
  // rows (unit activation bounds vs. per-sample displacement limits) and the
  // cost curvature can sit many orders of magnitude apart; the iteration
  // behaves poorly unless both are brought to a common scale.
  p_s_ = p_;
  a_s_ = a_;
  row_scale_ = Eigen::VectorXd::Ones(m);
  col_scale_ = Eigen::VectorXd::Ones(n);
  cost_scale_ = 1.0;
  for (int pass = 0; pass < st_.scaling_iters; ++pass) {
    Eigen::VectorXd dcol(n), erow(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double norm = std::max(p_s_.col(j).cwiseAbs().maxCoeff(),
                                   a_s_.col(j).cwiseAbs().maxCoeff());
      dcol(j) = norm > 1e-12 ? 1.0 / std::sqrt(norm) : 1.0;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double norm = a_s_.row(i).cwiseAbs().maxCoeff();
      erow(i) = norm > 1e-12 ? 1.0 / std::sqrt(norm) : 1.0;
    }
    p_s_ = dcol.asDiagonal() * p_s_ * dcol.asDiagonal();
    a_s_ = erow.asDiagonal() * a_s_ * dcol.asDiagonal();
    col_scale_ = col_scale_.cwiseProduct(dcol);
    row_scale_ = row_scale_.cwiseProduct(erow);

    double mean_col = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      mean_col += p_s_.col(j).cwiseAbs().maxCoeff();
    mean_col /= static_cast<double>(n);
    if (mean_col > 1e-12) {
      const double g = std::clamp(1.0 / mean_col, 1e-10, 1e10);
      p_s_ *= g;
      cost_scale_ *= g;
    }
  }

  lo_s_.resize(m);
  hi_s_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    lo_s_(i) = std::isfinite(lo_(i)) ? row_scale_(i) * lo_(i) : -kInf;
    hi_s_(i) = std::isfinite(hi_(i)) ? row_scale_(i) * hi_(i) : kInf;
  }

  ata_.noalias() = a_s_.transpose() * a_s_;
  rho0_ = st_.rho;
  Eigen::MatrixXd kkt =
      p_s_ + st_.sigma * Eigen::MatrixXd::Identity(n, n);
  kkt.noalias() += rho0_ * ata_;
  llt0_.compute(kkt);
  if (llt0_.info() != Eigen::Success)
    throw std::invalid_argument("BoxQp: P is not positive semidefinite");
}

QpResult BoxQp::solve(const Eigen::VectorXd& q) const {
  return run(q, Eigen::VectorXd::Zero(n_vars()),
             Eigen::VectorXd::Zero(n_constraints()));
}

QpResult BoxQp::solve(const Eigen::VectorXd& q, const Eigen::VectorXd& x_warm,
                      const Eigen::VectorXd& y_warm) const {
  if (x_warm.size() != n_vars() || y_warm.size() != n_constraints())
    return solve(q);
  // The iteration works on equilibrated data; map the warm pair in.
  return run(q, x_warm.cwiseQuotient(col_scale_),
             cost_scale_ * y_warm.cwiseQuotient(row_scale_));
}

QpResult BoxQp::run(const Eigen::VectorXd& q, Eigen::VectorXd x,
                    Eigen::VectorXd y) const {
  if (q.size() != n_vars()) throw std::invalid_argument("BoxQp: q size");
  const Eigen::Index n = n_vars();
  const Eigen::Index m = n_constraints();

  const Eigen::VectorXd q_s = cost_scale_ * q.cwiseProduct(col_scale_);

  double rho = rho0_;
  Eigen::LLT<Eigen::MatrixXd> llt = llt0_;
  auto refactor = [&](double new_rho) {
    Eigen::MatrixXd kkt =
        p_s_ + st_.sigma * Eigen::MatrixXd::Identity(n, n);
    kkt.noalias() += new_rho * ata_;
    llt.compute(kkt);
    rho = new_rho;
  };

  Eigen::VectorXd z = clamp_to_box(a_s_ * x, lo_s_, hi_s_);
  Eigen::VectorXd rhs(n), xt(n), zt(m), w(m), ax(m);

  QpResult best;
  best.kkt_residual = kInf;
  double eps_abs = st_.eps_abs;
  double eps_rel = st_.eps_rel;

  auto unscale = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
    QpResult raw;
    raw.x = xs.cwiseProduct(col_scale_);
    raw.y = ys.cwiseProduct(row_scale_) / cost_scale_;
    raw.ax = a_ * raw.x;
    return raw;
  };

  auto finish = [&](const Eigen::VectorXd& z_now, int iters) -> bool {
    QpResult cand;
    if (st_.polish && try_polish(q, z_now, y, &cand)) {
      if (cand.kkt_residual <= st_.kkt_tol) {
        cand.iterations = iters;
        cand.converged = true;
        best = cand;
        return true;
      }
      if (cand.kkt_residual < best.kkt_residual) {
        cand.iterations = iters;
        best = cand;
      }
    }
    QpResult raw = unscale(x, y);
    raw.iterations = iters;
    raw.polished = false;
    raw.kkt_residual = kkt_residual(p_, q, a_, lo_, hi_, raw.x, raw.y);
    if (raw.kkt_residual <= st_.kkt_tol) {
      raw.converged = true;
      best = raw;
      return true;
    }
    if (raw.kkt_residual < best.kkt_residual) best = raw;
    return false;
  };

  int iter = 0;
  for (; iter < st_.max_iters; ++iter) {
    rhs = st_.sigma * x - q_s;
    rhs.noalias() += a_s_.transpose() * (rho * z - y);
    xt = llt.solve(rhs);
    zt.noalias() = a_s_ * xt;
    x = st_.alpha * xt + (1.0 - st_.alpha) * x;
    w = st_.alpha * zt + (1.0 - st_.alpha) * z + y / rho;
    Eigen::VectorXd z_next = clamp_to_box(w, lo_s_, hi_s_);
    y += rho * (st_.alpha * zt + (1.0 - st_.alpha) * z - z_next);
    z = std::move(z_next);

    if ((iter + 1) % st_.check_every != 0) continue;

    // Residuals in original units; the scaled ones can flatter or slander.
    ax.noalias() = a_s_ * x;
    const double r_prim = inf_norm((ax - z).cwiseQuotient(row_scale_));
    const double prim_ref =
        std::max({inf_norm(ax.cwiseQuotient(row_scale_)),
                  inf_norm(z.cwiseQuotient(row_scale_)), 1e-30});
    const Eigen::VectorXd px = p_s_ * x;
    const Eigen::VectorXd aty = a_s_.transpose() * y;
    const double ic = 1.0 / cost_scale_;
    const double r_dual =
        ic * inf_norm((px + q_s + aty).cwiseQuotient(col_scale_));
    const double dual_ref =
        std::max({ic * inf_norm(px.cwiseQuotient(col_scale_)),
                  ic * inf_norm(aty.cwiseQuotient(col_scale_)),
                  ic * inf_norm(q_s.cwiseQuotient(col_scale_)), 1e-30});
    const bool prim_ok = r_prim <= eps_abs + eps_rel * prim_ref;
    const bool dual_ok = r_dual <= eps_abs + eps_rel * dual_ref;
    if (prim_ok && dual_ok) {
      if (finish(z, iter + 1)) return best;
      // The detected active set was not yet clean; keep iterating with a
      // tighter target instead of giving up.
      eps_abs = std::max(eps_abs * 0.1, 1e-14);
      eps_rel = std::max(eps_rel * 0.1, 1e-14);
    } else if (st_.adaptive_rho) {
      const double ratio = std::sqrt((r_prim / prim_ref) /
                                     std::max(r_dual / dual_ref, 1e-30));
      const double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
      if (rho_new > 5.0 * rho || rho_new < rho / 5.0) refactor(rho_new);
    }
  }

  finish(z, iter);
  return best;
}

bool BoxQp::try_polish(const Eigen::VectorXd& q, const Eigen::VectorXd& z_scaled,
                       const Eigen::VectorXd& y_scaled, QpResult* out) const {
  const Eigen::Index n = n_vars();
  const Eigen::Index m = n_constraints();
  const double y_thr = 1e-10 * std::max(1.0, inf_norm(y_scaled));

  // Two passes: multiplier sign first, then widened with near-active rows in
  // case a constraint sits exactly at its bound with a vanishing multiplier.
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<Eigen::Index> act;
    std::vector<double> act_rhs;  // original row units
    std::vector<int> act_side;    // -1 lower, +1 upper
    for (Eigen::Index i = 0; i < m; ++i) {
      int side = 0;
      if (y_scaled(i) < -y_thr) side = -1;
      else if (y_scaled(i) > y_thr) side = 1;
      if (attempt == 1 && side == 0) {
        const double prox = 1e-7 * std::max(1.0, std::abs(z_scaled(i)));
        if (std::isfinite(lo_s_(i)) && z_scaled(i) - lo_s_(i) <= prox) side = -1;
        else if (std::isfinite(hi_s_(i)) && hi_s_(i) - z_scaled(i) <= prox)
          side = 1;
      }
      if (side == -1 && std::isfinite(lo_(i))) {
        act.push_back(i);
        act_rhs.push_back(lo_(i));
        act_side.push_back(-1);
      } else if (side == 1 && std::isfinite(hi_(i))) {
        act.push_back(i);
        act_rhs.push_back(hi_(i));
        act_side.push_back(1);
      }
    }
    const Eigen::Index na = static_cast<Eigen::Index>(act.size());
    if (na > 3 * n) continue;  // degenerate detection; not worth a huge solve

    // Equality-constrained subproblem on the active rows via a regularized
    // saddle system, then iterative refinement against the exact one. Works
    // on the original data so its accuracy owes nothing to the scaling.
    const Eigen::Index dim = n + na;
    Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(dim, dim);
    k0.topLeftCorner(n, n) = p_;
    for (Eigen::Index j = 0; j < na; ++j) {
      k0.block(n + j, 0, 1, n) = a_.row(act[j]);
      k0.block(0, n + j, n, 1) = a_.row(act[j]).transpose();
    }
    Eigen::MatrixXd kreg = k0;
    const double delta = 1e-9;
    kreg.topLeftCorner(n, n).diagonal().array() += delta;
    kreg.bottomRightCorner(na, na).diagonal().array() -= delta;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kreg);

    Eigen::VectorXd rhs(dim);
    rhs.head(n) = -q;
    for (Eigen::Index j = 0; j < na; ++j) rhs(n + j) = act_rhs[j];
    Eigen::VectorXd sol = lu.solve(rhs);
    for (int r = 0; r < 3; ++r) {
      Eigen::VectorXd resid = rhs - k0 * sol;
      sol += lu.solve(resid);
    }

    QpResult cand;
    cand.x = sol.head(n);
    Eigen::VectorXd y_full = Eigen::VectorXd::Zero(m);
    bool sign_ok = true;
    const double nu_thr = 1e-10 * std::max(1.0, inf_norm(sol.tail(na)));
    for (Eigen::Index j = 0; j < na; ++j) {
      const double nu = sol(n + j);
      if (act_side[j] < 0 && nu > nu_thr) sign_ok = false;
      if (act_side[j] > 0 && nu < -nu_thr) sign_ok = false;
      y_full(act[j]) = nu;
    }
    cand.y = y_full;
    cand.ax = a_ * cand.x;
    cand.polished = true;
    cand.kkt_residual = kkt_residual(p_, q, a_, lo_, hi_, cand.x, cand.y);
    if (cand.kkt_residual <= st_.kkt_tol && sign_ok) {
      *out = cand;
      return true;
    }
    if (attempt == 1) {
      *out = cand;  // best effort; caller compares residuals
      return cand.kkt_residual <= st_.kkt_tol;
    }
  }
  return false;
}

}  // namespace manip
