// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/fim.hpp"

#include <cmath>
#include <limits>

namespace maisac {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotGuard = 1.0e-12;
}  // namespace

MatrixXd symmetric_inverse(const MatrixXd& m, const char* context) {
  Eigen::LDLT<MatrixXd> ldlt(0.5 * (m + m.transpose()));
  if (ldlt.info() != Eigen::Success)
    throw ConditioningError(std::string(context) + ": LDLT factorization failed");
  const VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0) || d.minCoeff() <= kPivotGuard * dmax)
    throw ConditioningError(std::string(context) +
                            ": matrix not positive definite within pivot guard");
  MatrixXd inv = ldlt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

GCoefficients g_coefficients(const SystemConfig& cfg, const ArrayLayout& layout,
                             double gamma) {
  GCoefficients c;
  const double q = cfg.num_blocks;
  const double df = cfg.subcarrier_spacing;
  const double ts = cfg.symbol_duration;
  const double lam = cfg.wavelength;
  const double noise = cfg.radar_noise_psd * cfg.useful_duration;
  const double two_pi_gamma = kTwoPi * gamma;
  const double pi_gamma = kPi * gamma;
  c.m_rx = layout.num_rx();
  c.tr_rx = layout.rx_positions.sum();
  c.tr_rx2 = layout.rx_positions.squaredNorm();
  c.c11 = (two_pi_gamma / lam) * (two_pi_gamma / lam) * q / noise;
  c.c12 = q * two_pi_gamma * two_pi_gamma * df / (lam * noise);
  c.c13 = q * (q - 1.0) * two_pi_gamma * two_pi_gamma * ts / (2.0 * lam * noise);
  c.c22 = q * (two_pi_gamma * df) * (two_pi_gamma * df) * c.m_rx / noise;
  c.c33 = 2.0 * q * (q - 1.0) * (2.0 * q - 1.0) * (pi_gamma * ts) *
          (pi_gamma * ts) * c.m_rx / (3.0 * noise);
  c.c23 = 2.0 * q * (q - 1.0) * pi_gamma * pi_gamma * df * ts * c.m_rx / noise;
  return c;
}

BeamQuadratics beam_quadratics(const VectorXcd& a_tx,
                               const VectorXd& tx_positions,
                               const VectorXcd& w) {
  BeamQuadratics f;
  const cplx aw = a_tx.dot(w);                      // a^H w
  cplx law(0.0, 0.0);                               // a^H Lambda_tx w
  for (int l = 0; l < w.size(); ++l)
    law += std::conj(a_tx[l]) * tx_positions[l] * w[l];
  f.g_form = std::norm(aw);
  f.k_form = std::norm(law);
  // w^H G Lambda w = (w^H a)(a^H Lambda w)
  f.z_form = std::conj(aw) * law;
  return f;
}

FisherBlocks fisher_blocks_from_forms(const GCoefficients& coef,
                                      const std::vector<BeamQuadratics>& forms) {
  const int n_sub = static_cast<int>(forms.size());
  FisherBlocks b;
  b.g11 = VectorXd(n_sub);
  b.g12 = VectorXd(n_sub);
  b.g13 = VectorXd(n_sub);
  b.g22 = VectorXd(n_sub);
  b.g33 = VectorXd(n_sub);
  b.g23 = VectorXd(n_sub);
  b.g12_im = VectorXd(n_sub);
  b.g13_im = VectorXd(n_sub);
  for (int n = 0; n < n_sub; ++n) {
    const BeamQuadratics& f = forms[n];
    const double re_z = f.z_form.real();
    const double im_z = f.z_form.imag();
    b.g11[n] = coef.c11 * (coef.tr_rx2 * f.g_form + coef.m_rx * f.k_form -
                           2.0 * coef.tr_rx * re_z);
    const double bracket_re = coef.tr_rx * f.g_form - coef.m_rx * re_z;
    // Imaginary remainder of tr(L_rx) G - M_rx w^H Lambda G w; the main
    // vectors keep the real part used by the zeta-space chain.
    const double bracket_im = coef.m_rx * im_z;
    b.g12[n] = -coef.c12 * n * bracket_re;
    b.g12_im[n] = -coef.c12 * n * bracket_im;
    b.g13[n] = coef.c13 * bracket_re;
    b.g13_im[n] = coef.c13 * bracket_im;
    b.g22[n] = coef.c22 * static_cast<double>(n) * n * f.g_form;
    b.g33[n] = coef.c33 * f.g_form;
    b.g23[n] = -coef.c23 * n * f.g_form;
  }
  return b;
}

FisherBlocks g_blocks(const SystemConfig& cfg, const ArrayLayout& layout,
                      const BeamformerSet& beams, const VehicleState& vehicle) {
  const EchoParams ep = derive_echo_params(cfg, vehicle);
  const GCoefficients coef = g_coefficients(cfg, layout, ep.gamma);
  const VectorXcd a = steering(layout.tx_positions, vehicle.theta, cfg.wavelength);
  std::vector<BeamQuadratics> forms(cfg.num_subcarriers);
  for (int n = 0; n < cfg.num_subcarriers; ++n)
    forms[n] = beam_quadratics(a, layout.tx_positions, beams.beams[n]);
  return fisher_blocks_from_forms(coef, forms);
}

Eigen::Matrix3cd fim_u_block_from_gblocks(const FisherBlocks& blocks,
                                          const VectorXd& powers) {
  auto dot = [&](const VectorXd& g) { return powers.dot(g); };
  const double j11 = dot(blocks.g11);
  const cplx j12(dot(blocks.g12), dot(blocks.g12_im));
  const cplx j13(dot(blocks.g13), dot(blocks.g13_im));
  const double j22 = dot(blocks.g22);
  const double j33 = dot(blocks.g33);
  const double j23 = dot(blocks.g23);
  Eigen::Matrix3cd j;
  j << cplx(j11, 0.0), j12, j13,
      std::conj(j12), cplx(j22, 0.0), cplx(j23, 0.0),
      std::conj(j13), cplx(j23, 0.0), cplx(j33, 0.0);
  return j;
}

ZetaWeights zeta_weights(const SystemConfig& cfg, const VehicleState& vehicle) {
  const double s = std::sin(vehicle.theta);
  const double c = std::cos(vehicle.theta);
  const double lam = cfg.wavelength;
  const double nu = vehicle.speed;
  ZetaWeights w;
  w.th_g11 = s * s;
  w.th_g13 = 4.0 * nu * s * s / lam;
  w.th_g33 = 4.0 * nu * nu * s * s / (lam * lam);
  w.dd_g22 = 4.0 / (cfg.lightspeed * cfg.lightspeed);
  w.dv_g23 = 4.0 * c / (cfg.lightspeed * lam);
  w.vv_g33 = 4.0 * c * c / (lam * lam);
  return w;
}

Eigen::Matrix3d chain_matrix(const SystemConfig& cfg, const VehicleState& vehicle) {
  const double s = std::sin(vehicle.theta);
  const double c = std::cos(vehicle.theta);
  Eigen::Matrix3d q;
  q << -s, 0.0, -2.0 * vehicle.speed * s / cfg.wavelength,
      0.0, 2.0 / cfg.lightspeed, 0.0,
      0.0, 0.0, 2.0 * c / cfg.wavelength;
  return q;
}

ZetaFim fim_zeta_block(const SystemConfig& cfg, const FisherBlocks& blocks,
                       const VehicleState& vehicle, const VectorXd& powers) {
  ZetaFim zf;
  zf.chain = chain_matrix(cfg, vehicle);
  const Eigen::Matrix3cd ju = fim_u_block_from_gblocks(blocks, powers);
  zf.q_block = zf.chain * ju.real() * zf.chain.transpose();
  zf.q_block = 0.5 * (zf.q_block + zf.q_block.transpose()).eval();
  return zf;
}

namespace {
// Schur form shared by lcrlb/lpcrlb: information of x given nuisance y.
double schur_information(double ixx, double ixy, double iyy) {
  if (iyy <= 0.0) return (ixy == 0.0) ? ixx : 0.0;
  return ixx - ixy * ixy / iyy;
}

double bound_from_information(double info) {
  return info > 0.0 ? 1.0 / info : kInf;
}
}  // namespace

BoundTriple lcrlb(const ZetaFim& zf) {
  const auto& q = zf.q_block;
  BoundTriple b;
  b.theta = bound_from_information(q(0, 0));
  b.distance = bound_from_information(schur_information(q(1, 1), q(1, 2), q(2, 2)));
  b.speed = bound_from_information(schur_information(q(2, 2), q(1, 2), q(1, 1)));
  return b;
}

BoundTriple lpcrlb(const ZetaFim& zf, const Eigen::Matrix3d& prior_block) {
  const auto& q = zf.q_block;
  const double a = q(1, 1) + prior_block(1, 1);
  const double bb = q(1, 2) + prior_block(1, 2);
  const double c = q(2, 2) + prior_block(2, 2);
  if (!(a > 0.0 && c > 0.0 && a * c - bb * bb > 0.0))
    throw InfeasibleError("lpcrlb: d-nu information block not positive definite",
                          "dv_information_block");
  BoundTriple b;
  b.theta = bound_from_information(q(0, 0) + prior_block(0, 0));
  b.distance = 1.0 / (a - bb * bb / c);
  b.speed = 1.0 / (c - bb * bb / a);
  return b;
}

MatrixXcd fim_u_full(const SystemConfig& cfg, const ArrayLayout& layout,
                     const BeamformerSet& beams,
                     const std::vector<VehicleState>& vehicles) {
  const int n_veh = static_cast<int>(vehicles.size());
  const int m_rx = layout.num_rx();
  const int q_blocks = cfg.num_blocks;
  MatrixXcd j = MatrixXcd::Zero(3 * n_veh, 3 * n_veh);

  std::vector<EchoParams> ep;
  std::vector<VectorXcd> a_tx, b_rx;
  for (const auto& v : vehicles) {
    ep.push_back(derive_echo_params(cfg, v));
    a_tx.push_back(steering(layout.tx_positions, v.theta, cfg.wavelength));
    b_rx.push_back(steering(layout.rx_positions, v.theta, cfg.wavelength));
  }

  // Columns of d x~ / d u_k for one (n, q) cell, stacked over receive antennas.
  MatrixXcd cols(m_rx, 3 * n_veh);
  const double c_tx = kTwoPi / cfg.wavelength;
  for (int n = 0; n < cfg.num_subcarriers; ++n) {
    const double p_n = beams.powers[n];
    if (!(p_n > 0.0)) continue;  // zero power: no signal, no noise
    const double inv_var = 1.0 / (p_n * cfg.radar_noise_psd * cfg.useful_duration);
    for (int q = 0; q < q_blocks; ++q) {
      for (int k = 0; k < n_veh; ++k) {
        const cplx aw = a_tx[k].dot(beams.beams[n]);
        cplx law(0.0, 0.0);  // a^H Lambda_tx w
        for (int l = 0; l < beams.beams[n].size(); ++l)
          law += std::conj(a_tx[k][l]) * layout.tx_positions[l] *
                 beams.beams[n][l];
        const double dphase = -kTwoPi * n * cfg.subcarrier_spacing * ep[k].delay;
        const double mphase = kTwoPi * ep[k].doppler * q * cfg.symbol_duration;
        const cplx rot = cplx(std::cos(dphase), std::sin(dphase)) *
                         cplx(std::cos(mphase), std::sin(mphase));
        const cplx common = ep[k].gamma * p_n * rot;
        for (int r = 0; r < m_rx; ++r) {
          const cplx br = b_rx[k][r];
          // d/d phi: (Lb_rx b a^H + b a^H Lb_tx) w with Lb_tx = -j c Lambda_tx,
          // Lb_rx = +j c Lambda_rx
          const cplx dphi = common * (cplx(0.0, c_tx * layout.rx_positions[r]) *
                                          br * aw +
                                      br * cplx(0.0, -c_tx) * law);
          const cplx base = common * br * aw;
          cols(r, 3 * k + 0) = dphi;
          cols(r, 3 * k + 1) =
              cplx(0.0, -kTwoPi * n * cfg.subcarrier_spacing) * base;
          cols(r, 3 * k + 2) = cplx(0.0, kTwoPi * q * cfg.symbol_duration) * base;
        }
      }
      j.noalias() += inv_var * (cols.adjoint() * cols);
    }
  }
  return j;
}

MatrixXd fim_zeta_full(const SystemConfig& cfg, const ArrayLayout& layout,
                       const BeamformerSet& beams,
                       const std::vector<VehicleState>& vehicles) {
  const int n_veh = static_cast<int>(vehicles.size());
  const MatrixXcd ju = fim_u_full(cfg, layout, beams, vehicles);
  MatrixXd chain = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  for (int k = 0; k < n_veh; ++k)
    chain.block<3, 3>(3 * k, 3 * k) = chain_matrix(cfg, vehicles[k]);
  MatrixXd j = chain * ju.real() * chain.transpose();
  return 0.5 * (j + j.transpose());
}

MatrixXd prior_fim(const TrackState& track, const MotionModel& motion) {
  const int n_veh = track.num_vehicles();
  MatrixXd predicted = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  MatrixXd g = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  for (int k = 0; k < n_veh; ++k)
    g.block<3, 3>(3 * k, 3 * k) = motion_jacobian(track.vehicle(k), motion);
  predicted = g * track.covariance * g.transpose();
  for (int k = 0; k < n_veh; ++k)
    predicted.block<3, 3>(3 * k, 3 * k) += motion.filter_process_cov();
  // Per-vehicle inversion keeps the result block-diagonal even if the
  // stored covariance carries small cross-vehicle terms.
  MatrixXd out = MatrixXd::Zero(3 * n_veh, 3 * n_veh);
  for (int k = 0; k < n_veh; ++k) {
    out.block<3, 3>(3 * k, 3 * k) =
        symmetric_inverse(predicted.block<3, 3>(3 * k, 3 * k), "prior_fim");
  }
  return out;
}

VectorXd pcrlb_diag(const MatrixXd& j_obs, const MatrixXd& j_prior,
                    bool exact_full_inverse) {
  const MatrixXd j = j_obs + j_prior;
  const int dim = static_cast<int>(j.rows());
  if (exact_full_inverse) {
    return symmetric_inverse(j, "pcrlb_diag(full)").diagonal();
  }
  VectorXd out(dim);
  for (int k = 0; k < dim / 3; ++k) {
    out.segment<3>(3 * k) =
        symmetric_inverse(j.block<3, 3>(3 * k, 3 * k), "pcrlb_diag(block)")
            .diagonal();
  }
  return out;
}

}  // namespace maisac
