// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/ekf.hpp"

#include <cmath>
#include <string>

namespace maisac {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// d x~ / d u columns, same cell layout as echo_noiseless_stack.
MatrixXcd echo_jacobian_u(const SystemConfig& cfg, const ArrayLayout& layout,
                          const BeamformerSet& beams,
                          const std::vector<VehicleState>& state) {
  const int n_veh = static_cast<int>(state.size());
  const int m_rx = layout.num_rx();
  const int q_blocks = cfg.num_blocks;
  const int cells = m_rx * q_blocks;
  MatrixXcd jac = MatrixXcd::Zero(
      static_cast<Eigen::Index>(cells) * cfg.num_subcarriers, 3 * n_veh);
  const double c_tx = kTwoPi / cfg.wavelength;
  for (int k = 0; k < n_veh; ++k) {
    const EchoParams ep = derive_echo_params(cfg, state[k]);
    const VectorXcd a = steering(layout.tx_positions, state[k].theta, cfg.wavelength);
    const VectorXcd b = steering(layout.rx_positions, state[k].theta, cfg.wavelength);
    for (int n = 0; n < cfg.num_subcarriers; ++n) {
      const double p_n = beams.powers[n];
      const cplx aw = a.dot(beams.beams[n]);
      cplx law(0.0, 0.0);
      for (int l = 0; l < beams.beams[n].size(); ++l)
        law += std::conj(a[l]) * layout.tx_positions[l] * beams.beams[n][l];
      const double dphase = -kTwoPi * n * cfg.subcarrier_spacing * ep.delay;
      const cplx delay_rot(std::cos(dphase), std::sin(dphase));
      for (int q = 0; q < q_blocks; ++q) {
        const double mphase = kTwoPi * ep.doppler * q * cfg.symbol_duration;
        const cplx rot = delay_rot * cplx(std::cos(mphase), std::sin(mphase));
        const cplx common = ep.gamma * p_n * rot;
        const int off = n * cells + q * m_rx;
        for (int r = 0; r < m_rx; ++r) {
          const cplx br = b[r];
          const cplx base = common * br * aw;
          jac(off + r, 3 * k + 0) =
              common * (cplx(0.0, c_tx * layout.rx_positions[r]) * br * aw +
                        br * cplx(0.0, -c_tx) * law);
          jac(off + r, 3 * k + 1) =
              cplx(0.0, -kTwoPi * n * cfg.subcarrier_spacing) * base;
          jac(off + r, 3 * k + 2) = cplx(0.0, kTwoPi * q * cfg.symbol_duration) * base;
        }
      }
    }
  }
  return jac;
}
}  // namespace

EkfJacobians ekf_jacobians(const SystemConfig& cfg, const ArrayLayout& layout,
                           const BeamformerSet& beams,
                           const std::vector<VehicleState>& state,
                           const MotionModel& motion) {
  const int n_veh = static_cast<int>(state.size());
  EkfJacobians out;
  out.g = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  for (int k = 0; k < n_veh; ++k)
    out.g.block<3, 3>(3 * k, 3 * k) = motion_jacobian(state[k], motion);
  out.h = echo_jacobian_u(cfg, layout, beams, state);
  for (int k = 0; k < n_veh; ++k) {
    const Eigen::Matrix3d chain = chain_matrix(cfg, state[k]);
    out.h.middleCols(3 * k, 3) =
        (out.h.middleCols(3 * k, 3) * chain.transpose().cast<cplx>()).eval();
  }
  return out;
}

TrackState ekf_predict(const TrackState& track, const MotionModel& motion) {
  const int n_veh = track.num_vehicles();
  TrackState pred;
  pred.slot = track.slot + 1;
  pred.estimate = VectorXd(3 * n_veh);
  std::vector<VehicleState> prev = track.vehicles();
  for (int k = 0; k < n_veh; ++k) {
    const VehicleState next = propagate_state(prev[k], motion, MotionDraw{});
    pred.estimate[3 * k] = next.theta;
    pred.estimate[3 * k + 1] = next.distance;
    pred.estimate[3 * k + 2] = next.speed;
  }
  MatrixXd g = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  for (int k = 0; k < n_veh; ++k)
    g.block<3, 3>(3 * k, 3 * k) = motion_jacobian(prev[k], motion);
  const MatrixXd propagated = g * track.covariance * g.transpose();
  // Cross-vehicle correlation is dropped at prediction, which keeps the
  // prior information block-diagonal per vehicle.
  pred.covariance = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  for (int k = 0; k < n_veh; ++k) {
    pred.covariance.block<3, 3>(3 * k, 3 * k) =
        propagated.block<3, 3>(3 * k, 3 * k) + motion.filter_process_cov();
  }
  pred.covariance = 0.5 * (pred.covariance + pred.covariance.transpose()).eval();
  return pred;
}

TrackState ekf_step(const TrackState& track, const EchoMeasurement& measurement,
                    const SystemConfig& cfg, const ArrayLayout& layout,
                    const BeamformerSet& beams, const MotionModel& motion) {
  const int n_veh = track.num_vehicles();
  const std::string slot_tag = " (slot " + std::to_string(track.slot + 1) + ")";

  TrackState pred = ekf_predict(track, motion);
  const std::vector<VehicleState> pred_state = pred.vehicles();

  MatrixXd theta_pred_inv;
  try {
    theta_pred_inv = symmetric_inverse(pred.covariance, "ekf_step");
  } catch (const ConditioningError& e) {
    throw ConditioningError(e.what() + slot_tag);
  }

  // Observed information in zeta coordinates; exact real part of H^H S^-1 H.
  const MatrixXd j_obs = fim_zeta_full(cfg, layout, beams, pred_state);

  MatrixXd theta_post;
  try {
    theta_post = symmetric_inverse(theta_pred_inv + j_obs, "ekf_step");
  } catch (const ConditioningError& e) {
    throw ConditioningError(e.what() + slot_tag);
  }

  // Innovation against the predicted noiseless echo.
  std::vector<EchoParams> pred_params;
  for (const auto& v : pred_state) pred_params.push_back(derive_echo_params(cfg, v));
  const VectorXcd predicted_echo =
      echo_noiseless_stack(cfg, layout, beams, pred_params);
  const VectorXcd innovation = measurement.samples - predicted_echo;

  const MatrixXcd h = ekf_jacobians(cfg, layout, beams, pred_state, motion).h;

  // H^H Sigma^-1 innovation, skipping zero-power subcarriers.
  VectorXcd weighted = VectorXcd::Zero(3 * n_veh);
  const int cells = measurement.m_rx * measurement.num_blocks;
  for (int n = 0; n < measurement.num_subcarriers; ++n) {
    const double var = measurement.noise_var[n];
    if (!(var > 0.0)) continue;
    weighted.noalias() += h.middleRows(n * cells, cells).adjoint() *
                          innovation.segment(n * cells, cells) / var;
  }

  TrackState next;
  next.slot = pred.slot;
  next.estimate = pred.estimate + (theta_post * weighted.real().matrix());
  next.covariance = theta_post;
  for (int k = 0; k < n_veh; ++k) {
    if (!(next.estimate[3 * k] > 0.0 && next.estimate[3 * k] < kPi) ||
        !(next.estimate[3 * k + 1] > 0.0))
      throw ConditioningError("ekf_step: updated state left its domain" + slot_tag);
  }
  return next;
}

TrackState make_initial_track(const std::vector<VehicleState>& truth,
                              const Eigen::Vector3d& init_sigma,
                              std::uint64_t seed) {
  const int n_veh = static_cast<int>(truth.size());
  TrackState t;
  t.slot = 0;
  t.estimate = VectorXd(3 * n_veh);
  t.covariance = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  Rng rng = Rng(seed).fork(0x696e6974ull);
  for (int k = 0; k < n_veh; ++k) {
    t.estimate[3 * k] = truth[k].theta + init_sigma[0] * rng.normal();
    t.estimate[3 * k + 1] = truth[k].distance + init_sigma[1] * rng.normal();
    t.estimate[3 * k + 2] = truth[k].speed + init_sigma[2] * rng.normal();
    for (int i = 0; i < 3; ++i) {
      const double v = std::max(init_sigma[i] * init_sigma[i], 1e-12);
      t.covariance(3 * k + i, 3 * k + i) = v;
    }
  }
  return t;
}

}  // namespace maisac
