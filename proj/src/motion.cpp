// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/motion.hpp"

#include <cmath>

namespace maisac {

Eigen::Matrix3d MotionModel::filter_process_cov() const {
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  const double span = dnu_max - dnu_min;
  cov(0, 0) = sigma_theta * sigma_theta;
  cov(1, 1) = sigma_d * sigma_d;
  cov(2, 2) = sigma_nu * sigma_nu + span * span / 12.0;
  return cov;
}

MotionDraw sample_motion(const MotionModel& motion, Rng& rng) {
  MotionDraw d;
  d.delta_nu = motion.dnu_min == motion.dnu_max
                   ? motion.dnu_min
                   : rng.uniform(motion.dnu_min, motion.dnu_max);
  d.w_theta = motion.sigma_theta * rng.normal();
  d.w_d = motion.sigma_d * rng.normal();
  d.w_nu = motion.sigma_nu * rng.normal();
  return d;
}

VehicleState propagate_state(const VehicleState& state,
                             const MotionModel& motion,
                             const MotionDraw& draw) {
  const double dt = motion.slot_duration;
  VehicleState next;
  next.theta = state.theta +
               state.speed * dt * std::sin(state.theta) / state.distance +
               draw.w_theta;
  next.distance =
      state.distance - state.speed * dt * std::cos(state.theta) + draw.w_d;
  next.speed = state.speed + draw.delta_nu + draw.w_nu;
  if (!(next.distance > 0.0))
    throw DomainError("propagate_state: degenerate geometry (d <= 0)");
  return next;
}

Eigen::Matrix3d motion_jacobian(const VehicleState& state,
                                const MotionModel& motion) {
  const double dt = motion.slot_duration;
  const double s = std::sin(state.theta);
  const double c = std::cos(state.theta);
  const double d = state.distance;
  const double nu = state.speed;
  Eigen::Matrix3d g;
  g << 1.0 + nu * dt * c / d, -nu * dt * s / (d * d), dt * s / d,
      nu * dt * s, 1.0, -dt * c,
      0.0, 0.0, 1.0;
  return g;
}

VehicleState propagate_state_exact(const VehicleState& state,
                                   const MotionModel& motion) {
  const double dd = state.speed * motion.slot_duration;
  VehicleState next;
  const double d2 = state.distance * state.distance + dd * dd -
                    2.0 * state.distance * dd * std::cos(state.theta);
  if (!(d2 > 0.0))
    throw DomainError("propagate_state_exact: degenerate geometry");
  next.distance = std::sqrt(d2);
  next.theta = state.theta +
               std::asin(dd * std::sin(state.theta) / next.distance);
  next.speed = state.speed;
  return next;
}

TrackState TrackState::from_vehicles(const std::vector<VehicleState>& v,
                                     const MatrixXd& cov, int slot) {
  TrackState t;
  t.estimate = VectorXd(3 * v.size());
  for (size_t k = 0; k < v.size(); ++k) {
    t.estimate[3 * k] = v[k].theta;
    t.estimate[3 * k + 1] = v[k].distance;
    t.estimate[3 * k + 2] = v[k].speed;
  }
  t.covariance = cov;
  t.slot = slot;
  return t;
}

}  // namespace maisac
