// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_INNER_POINT_HPP
#define MAISAC_INNER_POINT_HPP

#include <functional>

#include "maisac/types.hpp"

namespace maisac {

enum class SolveStatus { optimal, infeasible, max_iter };

/// Inner-solver contract: reported `optimal` means the relative duality-gap
/// bound fell below `tolerance` while every iterate stayed strictly feasible.
struct SolverContract {
  double tolerance = 1e-6;
  int max_iterations = 8000;
};

struct NewtonEval {
  double value = 0.0;  // -t * objective + barrier
  VectorXd grad;
  VectorXd step;
  double decrement2 = 0.0;  // grad^T H^-1 grad
};

/// A smooth concave maximization over the strict interior of a convex set,
/// described by its self-concordant barrier. Implementations supply the
/// Newton direction; the driver owns the path-following loop.
class BarrierModel {
 public:
  virtual ~BarrierModel() = default;
  virtual int num_vars() const = 0;
  virtual double barrier_degree() const = 0;
  virtual bool strictly_feasible(const VectorXd& z) const = 0;
  virtual double objective(const VectorXd& z) const = 0;
  virtual double value(const VectorXd& z, double t) const = 0;
  virtual NewtonEval newton_eval(const VectorXd& z, double t) const = 0;
};

struct BarrierOptions {
  double rel_gap_tol = 1e-6;
  double t0 = 1.0;
  double mu = 20.0;
  int max_newton_per_stage = 200;
  int max_total_newton = 8000;
  /// Optional early exit (e.g. phase-I success); checked after each step.
  std::function<bool(const VectorXd&)> early_stop;
};

struct BarrierResult {
  VectorXd z;
  double objective = 0.0;
  double gap = 0.0;  // barrier_degree / t at exit
  double t_final = 0.0;
  int newton_steps = 0;
  SolveStatus status = SolveStatus::max_iter;
  bool early_stopped = false;
};

/// Path-following barrier maximization from a strictly feasible start.
BarrierResult barrier_maximize(const BarrierModel& model, VectorXd z0,
                               const BarrierOptions& opts);

/// Gradient and Hessian of -log det on 2x2 symmetric matrices in
/// (m11, m12, m22) coordinates. Returns false when the matrix is not PD.
bool logdet2_barrier(const Eigen::Vector3d& m, double* value,
                     Eigen::Vector3d* grad, Eigen::Matrix3d* hess);

}  // namespace maisac

#endif  // MAISAC_INNER_POINT_HPP
