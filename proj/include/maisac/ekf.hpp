// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_EKF_HPP
#define MAISAC_EKF_HPP

#include <vector>

#include "maisac/fim.hpp"
#include "maisac/motion.hpp"
#include "maisac/types.hpp"

namespace maisac {

struct EkfJacobians {
  MatrixXd g;   // 3K x 3K block-diagonal motion Jacobian
  MatrixXcd h;  // (M_rx Q N) x 3K measurement Jacobian, columns per (theta,d,nu)
};

/// Motion and measurement Jacobians at the given state. The measurement
/// Jacobian stacks d x~/d u_k times the chain block per vehicle.
EkfJacobians ekf_jacobians(const SystemConfig& cfg, const ArrayLayout& layout,
                           const BeamformerSet& beams,
                           const std::vector<VehicleState>& state,
                           const MotionModel& motion);

/// One predict/update cycle in information form. The updated MSE matrix is
/// (Theta_pred^-1 + Re(H^H Sigma^-1 H))^-1 and the state correction is
/// Re(K (y - h(pred))) with K = Theta_m H^H Sigma^-1.
TrackState ekf_step(const TrackState& track, const EchoMeasurement& measurement,
                    const SystemConfig& cfg, const ArrayLayout& layout,
                    const BeamformerSet& beams, const MotionModel& motion);

/// Predicted mean and covariance without a measurement.
TrackState ekf_predict(const TrackState& track, const MotionModel& motion);

/// Ground-truth-plus-noise initialization; init_sigma per (theta, d, nu).
TrackState make_initial_track(const std::vector<VehicleState>& truth,
                              const Eigen::Vector3d& init_sigma,
                              std::uint64_t seed);

}  // namespace maisac

#endif  // MAISAC_EKF_HPP
