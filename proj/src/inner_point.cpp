// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/inner_point.hpp"

#include <cmath>

namespace maisac {

BarrierResult barrier_maximize(const BarrierModel& model, VectorXd z0,
                               const BarrierOptions& opts) {
  if (!model.strictly_feasible(z0))
    throw std::logic_error("barrier_maximize: start point not strictly feasible");

  BarrierResult res;
  res.z = std::move(z0);
  double t = opts.t0;
  int total_newton = 0;

  while (true) {
    // Centering at the current t.
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      if (total_newton >= opts.max_total_newton) {
        res.status = SolveStatus::max_iter;
        res.objective = model.objective(res.z);
        res.gap = model.barrier_degree() / t;
        res.t_final = t;
        res.newton_steps = total_newton;
        return res;
      }
      NewtonEval ev = model.newton_eval(res.z, t);
      ++total_newton;
      // The decrement is affine-invariant; an absolute test keeps late
      // centering stages (large t) fully converged.
      if (ev.decrement2 * 0.5 <= 1e-9) break;

      double alpha = 1.0;
      const double slope = -ev.decrement2;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const VectorXd trial = res.z + alpha * ev.step;
        if (model.strictly_feasible(trial)) {
          const double f_trial = model.value(trial, t);
          if (f_trial <= ev.value + 0.25 * alpha * slope) {
            res.z = trial;
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!moved) break;  // numerical floor of this centering problem
      if (opts.early_stop && opts.early_stop(res.z)) {
        res.status = SolveStatus::optimal;
        res.early_stopped = true;
        res.objective = model.objective(res.z);
        res.gap = model.barrier_degree() / t;
        res.t_final = t;
        res.newton_steps = total_newton;
        return res;
      }
    }

    const double gap = model.barrier_degree() / t;
    const double scale = 1.0 + std::abs(model.objective(res.z));
    if (gap <= opts.rel_gap_tol * scale) {
      res.status = SolveStatus::optimal;
      res.objective = model.objective(res.z);
      res.gap = gap;
      res.t_final = t;
      res.newton_steps = total_newton;
      return res;
    }
    t *= opts.mu;
  }
}

bool logdet2_barrier(const Eigen::Vector3d& m, double* value,
                     Eigen::Vector3d* grad, Eigen::Matrix3d* hess) {
  const double det = m[0] * m[2] - m[1] * m[1];
  if (!(m[0] > 0.0) || !(det > 0.0)) return false;
  if (value) *value = -std::log(det);
  const Eigen::Vector3d ddet(m[2], -2.0 * m[1], m[0]);
  if (grad) *grad = -ddet / det;
  if (hess) {
    Eigen::Matrix3d d2det = Eigen::Matrix3d::Zero();
    d2det(0, 2) = d2det(2, 0) = 1.0;
    d2det(1, 1) = -2.0;
    *hess = (ddet * ddet.transpose()) / (det * det) - d2det / det;
  }
  return true;
}

}  // namespace maisac
