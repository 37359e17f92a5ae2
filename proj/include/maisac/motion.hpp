// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_MOTION_HPP
#define MAISAC_MOTION_HPP

#include <vector>

#include "maisac/rng.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Slot-to-slot kinematics: process noise levels and the uniform speed
/// increment bounds. The speed increment is part of the true motion; the
/// tracking filter absorbs its variance into the nu process noise.
struct MotionModel {
  double slot_duration = 0.02;  // delta T [s]
  double sigma_theta = 1.0e-4;  // [rad]
  double sigma_d = 0.1;         // [m]
  double sigma_nu = 0.1;        // [m/s]
  double dnu_min = 0.0;         // [m/s]
  double dnu_max = 0.0;         // [m/s]

  /// Per-vehicle process covariance as seen by the filter. The uniform
  /// speed increment contributes (dnu_max-dnu_min)^2/12 to the nu variance.
  Eigen::Matrix3d filter_process_cov() const;
};

/// Explicit randomness for one propagation step; all zeros gives the
/// deterministic (noiseless, zero-increment) map.
struct MotionDraw {
  double delta_nu = 0.0;
  double w_theta = 0.0;
  double w_d = 0.0;
  double w_nu = 0.0;
};

MotionDraw sample_motion(const MotionModel& motion, Rng& rng);

/// One slot of the kinematic map:
///   theta' = theta + d^-1 nu dT sin(theta) + w_theta
///   d'     = d - nu dT cos(theta) + w_d
///   nu'    = nu + delta_nu + w_nu
/// Throws DomainError if the propagated distance is not positive.
VehicleState propagate_state(const VehicleState& state,
                             const MotionModel& motion,
                             const MotionDraw& draw);

/// Jacobian of the deterministic kinematic map at `state` (one 3x3 block).
Eigen::Matrix3d motion_jacobian(const VehicleState& state,
                                const MotionModel& motion);

/// Exact geometric relations behind the linearized map; used only as a
/// small-step validation reference, never inside the filter.
VehicleState propagate_state_exact(const VehicleState& state,
                                   const MotionModel& motion);

/// Stacked per-vehicle EKF estimate and MSE matrix.
struct TrackState {
  VectorXd estimate;     // 3K: (theta, d, nu) per vehicle
  MatrixXd covariance;   // 3K x 3K symmetric PD
  int slot = 0;

  int num_vehicles() const { return static_cast<int>(estimate.size()) / 3; }
  VehicleState vehicle(int k) const {
    return VehicleState{estimate[3 * k], estimate[3 * k + 1],
                        estimate[3 * k + 2]};
  }
  std::vector<VehicleState> vehicles() const {
    std::vector<VehicleState> out;
    for (int k = 0; k < num_vehicles(); ++k) out.push_back(vehicle(k));
    return out;
  }
  static TrackState from_vehicles(const std::vector<VehicleState>& v,
                                  const MatrixXd& cov, int slot = 0);
};

}  // namespace maisac

#endif  // MAISAC_MOTION_HPP
