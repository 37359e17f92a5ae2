// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/power.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace maisac {

namespace {
constexpr double kLn2 = 0.69314718055994530942;

struct SensingRows {
  // Information margins per vehicle, affine in p: value = coef . p + constant.
  struct Row {
    VectorXd coef;
    double constant = 0.0;
  };
  Row theta;              // I_theta + J11 - 1/threshold_theta
  std::array<Row, 3> dmat;  // scaled entries of [[A - 1/ς_d, B], [B, C]]
  std::array<Row, 3> vmat;  // scaled entries of [[C - 1/ς_v, B], [B, A]]
  double theta_scale = 1.0;
  std::string name_theta, name_d, name_v;
};

SensingRows build_rows(const PowerProblem::VehicleSensing& v, int index,
                       const VectorXd& p0) {
  SensingRows r;
  const auto& w = v.weights;
  const auto& b = v.blocks;
  const VectorXd t_theta =
      w.th_g11 * b.g11 + w.th_g13 * b.g13 + w.th_g33 * b.g33;
  const VectorXd a_coef = w.dd_g22 * b.g22;
  const VectorXd b_coef = w.dv_g23 * b.g23;
  const VectorXd c_coef = w.vv_g33 * b.g33;
  const double ja = v.prior(1, 1);
  const double jb = v.prior(1, 2);
  const double jc = v.prior(2, 2);
  const double jt = v.prior(0, 0);

  r.name_theta = "theta_lpcrlb[" + std::to_string(index) + "]";
  r.name_d = "distance_lpcrlb[" + std::to_string(index) + "]";
  r.name_v = "velocity_lpcrlb[" + std::to_string(index) + "]";

  const double inv_t = 1.0 / v.thresholds.theta;
  const double inv_d = 1.0 / v.thresholds.distance;
  const double inv_v = 1.0 / v.thresholds.speed;

  r.theta.coef = t_theta;
  r.theta.constant = jt - inv_t;
  const double theta0 = std::abs(t_theta.dot(p0) + jt) + inv_t;
  r.theta_scale = std::max(theta0, 1e-300);
  r.theta.coef /= r.theta_scale;
  r.theta.constant /= r.theta_scale;

  const double a0 = std::abs(a_coef.dot(p0) + ja) + inv_d;
  const double c0 = std::abs(c_coef.dot(p0) + jc) + 1e-300;
  const double s1 = 1.0 / std::sqrt(a0);
  const double s2 = 1.0 / std::sqrt(c0);
  r.dmat[0].coef = s1 * s1 * a_coef;
  r.dmat[0].constant = s1 * s1 * (ja - inv_d);
  r.dmat[1].coef = s1 * s2 * b_coef;
  r.dmat[1].constant = s1 * s2 * jb;
  r.dmat[2].coef = s2 * s2 * c_coef;
  r.dmat[2].constant = s2 * s2 * jc;

  const double cv0 = std::abs(c_coef.dot(p0) + jc) + inv_v;
  const double av0 = std::abs(a_coef.dot(p0) + ja) + 1e-300;
  const double u1 = 1.0 / std::sqrt(cv0);
  const double u2 = 1.0 / std::sqrt(av0);
  r.vmat[0].coef = u1 * u1 * c_coef;
  r.vmat[0].constant = u1 * u1 * (jc - inv_v);
  r.vmat[1].coef = u1 * u2 * b_coef;
  r.vmat[1].constant = u1 * u2 * jb;
  r.vmat[2].coef = u2 * u2 * a_coef;
  r.vmat[2].constant = u2 * u2 * ja;
  return r;
}

class PowerQosModel : public BarrierModel {
 public:
  PowerQosModel(const PowerProblem& prob, bool phase1)
      : prob_(prob), phase1_(phase1), n_(static_cast<int>(prob.gains.size())) {
    const VectorXd p0 =
        VectorXd::Constant(n_, prob.budget / std::max(1, n_));
    for (int k = 0; k < static_cast<int>(prob.vehicles.size()); ++k)
      rows_.push_back(build_rows(prob.vehicles[k], k, p0));
  }

  int num_vars() const override { return n_ + (phase1_ ? 1 : 0); }
  double barrier_degree() const override {
    return n_ + 1.0 + 5.0 * static_cast<double>(rows_.size());
  }

  bool strictly_feasible(const VectorXd& z) const override {
    const double s = phase1_ ? z[n_] : 0.0;
    for (int i = 0; i < n_; ++i)
      if (!(z[i] > 0.0)) return false;
    if (!(prob_.budget - z.head(n_).sum() > 0.0)) return false;
    for (const auto& r : rows_) {
      if (!(margin(r.theta, z, s) > 0.0)) return false;
      if (!psi_pd(r.dmat, z, s)) return false;
      if (!psi_pd(r.vmat, z, s)) return false;
    }
    return true;
  }

  double objective(const VectorXd& z) const override {
    if (phase1_) return -z[n_];
    return rate(z);
  }

  double value(const VectorXd& z, double t) const override {
    const double s = phase1_ ? z[n_] : 0.0;
    double v = -t * objective(z);
    for (int i = 0; i < n_; ++i) v -= std::log(z[i]);
    v -= std::log(prob_.budget - z.head(n_).sum());
    for (const auto& r : rows_) {
      v -= std::log(margin(r.theta, z, s));
      double ld = 0.0;
      logdet2_barrier(psi_vec(r.dmat, z, s), &ld, nullptr, nullptr);
      v += ld;
      logdet2_barrier(psi_vec(r.vmat, z, s), &ld, nullptr, nullptr);
      v += ld;
    }
    return v;
  }

  NewtonEval newton_eval(const VectorXd& z, double t) const override {
    const int dim = num_vars();
    const double s = phase1_ ? z[n_] : 0.0;
    NewtonEval ev;
    ev.grad = VectorXd::Zero(dim);
    MatrixXd hess = MatrixXd::Zero(dim, dim);

    if (phase1_) {
      ev.grad[n_] += t;  // -t * objective = t * s
    } else {
      for (int i = 0; i < n_; ++i) {
        const double g = prob_.gains[i];
        if (g <= 0.0) continue;
        const double den = 1.0 + g * z[i];
        ev.grad[i] -= t * g / (den * kLn2);
        hess(i, i) += t * g * g / (den * den * kLn2);
      }
    }

    for (int i = 0; i < n_; ++i) {
      ev.grad[i] -= 1.0 / z[i];
      hess(i, i) += 1.0 / (z[i] * z[i]);
    }
    const double slack = prob_.budget - z.head(n_).sum();
    for (int i = 0; i < n_; ++i) ev.grad[i] += 1.0 / slack;
    hess.topLeftCorner(n_, n_).array() += 1.0 / (slack * slack);

    for (const auto& r : rows_) {
      add_scalar_barrier(r.theta, z, s, &ev.grad, &hess);
      add_psi_barrier(r.dmat, z, s, &ev.grad, &hess);
      add_psi_barrier(r.vmat, z, s, &ev.grad, &hess);
    }

    ev.value = value(z, t);
    Eigen::LDLT<MatrixXd> ldlt(hess);
    ev.step = ldlt.solve(-ev.grad);
    ev.decrement2 = -ev.grad.dot(ev.step);
    if (!(ev.decrement2 >= 0.0)) ev.decrement2 = 0.0;
    return ev;
  }

  double rate(const VectorXd& z) const {
    double v = 0.0;
    for (int i = 0; i < n_; ++i)
      v += std::log2(1.0 + prob_.gains[i] * z[i]);
    return v;
  }

  /// Smallest scaled margin over all sensing constraints with its name.
  std::pair<double, std::string> min_margin(const VectorXd& z) const {
    double best = std::numeric_limits<double>::infinity();
    std::string name = "none";
    const double s = 0.0;
    for (const auto& r : rows_) {
      const double mt = margin(r.theta, z, s);
      if (mt < best) {
        best = mt;
        name = r.name_theta;
      }
      const Eigen::Vector3d d = psi_vec(r.dmat, z, s);
      const double dd = std::min(d[0], d[0] * d[2] - d[1] * d[1]);
      if (dd < best) {
        best = dd;
        name = r.name_d;
      }
      const Eigen::Vector3d v3 = psi_vec(r.vmat, z, s);
      const double vv = std::min(v3[0], v3[0] * v3[2] - v3[1] * v3[1]);
      if (vv < best) {
        best = vv;
        name = r.name_v;
      }
    }
    return {best, name};
  }

  int n_power() const { return n_; }

 private:
  static double margin(const SensingRows::Row& row, const VectorXd& z,
                       double s) {
    return row.coef.dot(z.head(row.coef.size())) + row.constant + s;
  }

  static Eigen::Vector3d psi_vec(const std::array<SensingRows::Row, 3>& rows,
                                 const VectorXd& z, double s) {
    Eigen::Vector3d m;
    m[0] = margin(rows[0], z, s);
    m[1] = margin(rows[1], z, 0.0);
    m[2] = margin(rows[2], z, s);
    return m;
  }

  static bool psi_pd(const std::array<SensingRows::Row, 3>& rows,
                     const VectorXd& z, double s) {
    const Eigen::Vector3d m = psi_vec(rows, z, s);
    return m[0] > 0.0 && m[0] * m[2] - m[1] * m[1] > 0.0;
  }

  void add_scalar_barrier(const SensingRows::Row& row, const VectorXd& z,
                          double s, VectorXd* grad, MatrixXd* hess) const {
    const double m = margin(row, z, s);
    VectorXd j = VectorXd::Zero(num_vars());
    j.head(row.coef.size()) = row.coef;
    if (phase1_) j[n_] = 1.0;
    *grad += -j / m;
    hess->noalias() += (j * j.transpose()) / (m * m);
  }

  void add_psi_barrier(const std::array<SensingRows::Row, 3>& rows,
                       const VectorXd& z, double s, VectorXd* grad,
                       MatrixXd* hess) const {
    const Eigen::Vector3d m = psi_vec(rows, z, s);
    Eigen::Vector3d gb;
    Eigen::Matrix3d hb;
    logdet2_barrier(m, nullptr, &gb, &hb);
    MatrixXd jac = MatrixXd::Zero(3, num_vars());
    for (int i = 0; i < 3; ++i)
      jac.row(i).head(rows[i].coef.size()) = rows[i].coef.transpose();
    if (phase1_) {
      jac(0, n_) = 1.0;
      jac(2, n_) = 1.0;
    }
    grad->noalias() += jac.transpose() * gb;
    hess->noalias() += jac.transpose() * hb * jac;
  }

  const PowerProblem& prob_;
  bool phase1_;
  int n_;
  std::vector<SensingRows> rows_;
};

// Shared water-level routine: maximize rho * sum log2(1+g p) + sigma . p
// over the budget simplex. Zero-gain subcarriers receive zero power.
PowerResult water_level_solve(const VectorXd& gains, double budget, double rho,
                              const VectorXd& sigma) {
  const int n = static_cast<int>(gains.size());
  PowerResult res;
  res.p = VectorXd::Zero(n);

  if (rho <= 0.0) {
    // Linear program over the simplex: everything on the best coefficient.
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (sigma[i] > sigma[best]) best = i;
    if (sigma[best] <= 0.0) {
      res.p.setConstant(budget / n);
      res.note = "degenerate linear objective; uniform fallback";
    } else {
      res.p[best] = budget;
    }
    res.objective = 0.0;
    for (int i = 0; i < n; ++i)
      res.objective += std::log2(1.0 + gains[i] * res.p[i]);
    res.kkt_residual = 0.0;
    return res;
  }

  double sigma_max = -std::numeric_limits<double>::infinity();
  double level_hi = 0.0;
  bool any_gain = false;
  for (int i = 0; i < n; ++i) {
    if (gains[i] > 0.0) {
      any_gain = true;
      sigma_max = std::max(sigma_max, sigma[i]);
      level_hi = std::max(level_hi, sigma[i] + rho * gains[i] / kLn2);
    }
  }
  if (!any_gain) {
    res.p.setConstant(budget / n);
    res.note = "all gains zero; uniform fallback";
    res.objective = 0.0;
    return res;
  }

  auto demand = [&](double level) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (gains[i] <= 0.0) continue;
      if (level <= sigma[i]) return std::numeric_limits<double>::infinity();
      total += std::max(0.0, rho / ((level - sigma[i]) * kLn2) - 1.0 / gains[i]);
    }
    return total;
  };

  double lo = sigma_max;
  double hi = std::max(level_hi, sigma_max + 1e-30);
  // Expand hi until demand(hi) <= budget (it is 0 at level_hi by design).
  for (int it = 0; it < 200 && demand(hi) > budget; ++it) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (demand(mid) > budget)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) break;
  }
  const double level = hi;
  for (int i = 0; i < n; ++i) {
    if (gains[i] <= 0.0) continue;
    res.p[i] = std::max(0.0, rho / ((level - sigma[i]) * kLn2) - 1.0 / gains[i]);
  }

  res.objective = 0.0;
  for (int i = 0; i < n; ++i)
    res.objective += std::log2(1.0 + gains[i] * res.p[i]);
  double stationarity = 0.0;
  for (int i = 0; i < n; ++i) {
    if (res.p[i] <= 0.0) continue;
    const double marginal =
        rho * gains[i] / ((1.0 + gains[i] * res.p[i]) * kLn2) + sigma[i];
    stationarity = std::max(stationarity, std::abs(marginal - level) /
                                              std::max(1.0, std::abs(level)));
  }
  res.kkt_residual = std::abs(res.p.sum() - budget) + stationarity;
  return res;
}
}  // namespace

PsiMatrices psi_matrices(const FisherBlocks& blocks,
                         const Eigen::Matrix3d& prior, const ZetaWeights& w,
                         double threshold_d, double threshold_v,
                         const VectorXd& p) {
  if (!(threshold_d > 0.0) || !(threshold_v > 0.0))
    throw DomainError("psi_matrices: thresholds must be positive");
  const double q22 = w.dd_g22 * p.dot(blocks.g22) + prior(1, 1);
  const double q23 = w.dv_g23 * p.dot(blocks.g23) + prior(1, 2);
  const double q33 = w.vv_g33 * p.dot(blocks.g33) + prior(2, 2);
  PsiMatrices out;
  out.psi_d << q33, std::sqrt(threshold_d) * q23,
      std::sqrt(threshold_d) * q23, threshold_d * q22 - 1.0;
  out.psi_v << q22, std::sqrt(threshold_v) * q23,
      std::sqrt(threshold_v) * q23, threshold_v * q33 - 1.0;
  return out;
}

PowerResult waterfill(const VectorXd& gains, double budget,
                      double sensing_multiplier) {
  if (!(budget > 0.0)) throw DomainError("waterfill: budget must be positive");
  for (int i = 0; i < gains.size(); ++i)
    if (gains[i] < 0.0) throw DomainError("waterfill: negative gain");
  return water_level_solve(gains, budget, 1.0,
                           VectorXd::Constant(gains.size(), sensing_multiplier));
}

PowerResult solve_power_qos(const PowerProblem& prob,
                            const SolverContract& contract) {
  const int n = static_cast<int>(prob.gains.size());
  VectorXd p0 = VectorXd::Constant(n, 0.9 * prob.budget / n);

  PowerQosModel main_model(prob, /*phase1=*/false);
  VectorXd start = p0;
  if (!main_model.strictly_feasible(p0)) {
    PowerQosModel phase1(prob, /*phase1=*/true);
    VectorXd z0(n + 1);
    z0.head(n) = p0;
    // Slack large enough to clear every margin at the uniform point.
    double s0 = 1.0;
    for (double trial = 1.0; trial < 1e12; trial *= 4.0) {
      z0[n] = trial;
      if (phase1.strictly_feasible(z0)) {
        s0 = trial;
        break;
      }
    }
    z0[n] = s0;
    BarrierOptions opts;
    opts.rel_gap_tol = 1e-8;
    opts.max_total_newton = contract.max_iterations;
    opts.early_stop = [n](const VectorXd& z) { return z[n] < -1e-2; };
    const BarrierResult pr = barrier_maximize(phase1, z0, opts);
    if (pr.z[n] >= 0.0) {
      PowerResult out;
      out.p = pr.z.head(n);
      out.status = SolveStatus::infeasible;
      out.note = main_model.min_margin(pr.z.head(n)).second;
      return out;
    }
    start = pr.z.head(n);
  }

  BarrierOptions opts;
  opts.rel_gap_tol = std::min(contract.tolerance, 1e-12);
  opts.max_total_newton = contract.max_iterations;
  const BarrierResult br = barrier_maximize(main_model, start, opts);

  PowerResult out;
  out.p = br.z;
  out.objective = br.objective;
  out.status = br.status;
  // Stationarity defect of the barrier-centered point in objective units.
  out.kkt_residual = br.gap / std::max(1.0, std::abs(br.objective));
  return out;
}

VectorXd weighted_sensing_coefficients(const PowerProblem& prob,
                                       const Eigen::Vector3d& aleph) {
  const int n = static_cast<int>(prob.gains.size());
  VectorXd sigma = VectorXd::Zero(n);
  for (const auto& v : prob.vehicles) {
    const auto& w = v.weights;
    sigma += aleph[0] * (w.th_g11 * v.blocks.g11 + w.th_g13 * v.blocks.g13 +
                         w.th_g33 * v.blocks.g33);
    sigma += aleph[1] * (w.dd_g22 * v.blocks.g22);
    sigma += aleph[2] * (w.vv_g33 * v.blocks.g33);
  }
  return sigma;
}

PowerResult solve_power_weighted(const PowerProblem& prob, double rho,
                                 const Eigen::Vector3d& aleph) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw DomainError("solve_power_weighted: rho must lie in [0, 1]");
  const VectorXd sigma =
      (1.0 - rho) * weighted_sensing_coefficients(prob, aleph);
  return water_level_solve(prob.gains, prob.budget, rho, sigma);
}

}  // namespace maisac
