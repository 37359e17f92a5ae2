// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_FIM_HPP
#define MAISAC_FIM_HPP

#include <vector>

#include "maisac/model.hpp"
#include "maisac/motion.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Per-vehicle Fisher element vectors (length N each, information per unit
/// power). g11/g22/g33/g23 are exactly real; g12/g13 carry the real part in
/// the main vectors and the imaginary remainder separately so the complex
/// Hermitian u-space block can be reassembled exactly.
struct FisherBlocks {
  VectorXd g11, g12, g13, g22, g33, g23;
  VectorXd g12_im, g13_im;
};

/// Closed-form coefficients of the g-vectors for one vehicle.
struct GCoefficients {
  double c11 = 0.0;  // (2 pi gamma / lambda)^2 Q / (eta1 T_e)
  double c12 = 0.0;  // Q (2 pi gamma)^2 df / (lambda eta1 T_e)
  double c13 = 0.0;  // Q(Q-1) (2 pi gamma)^2 T_s / (2 lambda eta1 T_e)
  double c22 = 0.0;  // Q (2 pi gamma df)^2 M_rx / (eta1 T_e)
  double c33 = 0.0;  // 2 Q(Q-1)(2Q-1) (pi gamma T_s)^2 M_rx / (3 eta1 T_e)
  double c23 = 0.0;  // 2 Q(Q-1) (pi gamma)^2 df T_s M_rx / (eta1 T_e)
  double tr_rx = 0.0;   // Tr(Lambda_rx)
  double tr_rx2 = 0.0;  // Tr(Lambda_rx^2)
  int m_rx = 0;
};

GCoefficients g_coefficients(const SystemConfig& cfg, const ArrayLayout& layout,
                             double gamma);

/// Transmit-side quadratic forms of one beam for one vehicle.
struct BeamQuadratics {
  double g_form = 0.0;   // w^H G_k w = |a^H w|^2
  double k_form = 0.0;   // w^H K_k w = |a^H Lambda_tx w|^2
  cplx z_form{0.0, 0.0};  // w^H G_k Lambda_tx w
};

BeamQuadratics beam_quadratics(const VectorXcd& a_tx, const VectorXd& tx_positions,
                               const VectorXcd& w);

/// g-vectors from precomputed per-subcarrier quadratic forms. Shared with
/// the beamforming SDP, where the forms are traces against W_n.
FisherBlocks fisher_blocks_from_forms(const GCoefficients& coef,
                                      const std::vector<BeamQuadratics>& forms);

FisherBlocks g_blocks(const SystemConfig& cfg, const ArrayLayout& layout,
                      const BeamformerSet& beams, const VehicleState& vehicle);

/// u-space 3x3 Hermitian block assembled from the closed forms.
Eigen::Matrix3cd fim_u_block_from_gblocks(const FisherBlocks& blocks,
                                          const VectorXd& powers);

/// Weights mapping p^T g sums into angle/distance/speed information.
struct ZetaWeights {
  double th_g11 = 0.0;  // sin^2(theta)
  double th_g13 = 0.0;  // 4 nu sin^2(theta) / lambda
  double th_g33 = 0.0;  // 4 nu^2 sin^2(theta) / lambda^2
  double dd_g22 = 0.0;  // 4 / c^2
  double dv_g23 = 0.0;  // 4 cos(theta) / (c lambda)
  double vv_g33 = 0.0;  // 4 cos^2(theta) / lambda^2
};

ZetaWeights zeta_weights(const SystemConfig& cfg, const VehicleState& vehicle);

/// Chain-rule matrix Q_kk: rows are (theta, d, nu), columns (phi, tau, mu).
Eigen::Matrix3d chain_matrix(const SystemConfig& cfg, const VehicleState& vehicle);

/// Principal zeta-space information block of one vehicle.
struct ZetaFim {
  Eigen::Matrix3d q_block;  // script-Q_kk in (theta, d, nu)
  Eigen::Matrix3d chain;    // Q_kk
};

ZetaFim fim_zeta_block(const SystemConfig& cfg, const FisherBlocks& blocks,
                       const VehicleState& vehicle, const VectorXd& powers);

/// Bounds on (theta, d, nu) estimation variance [rad^2, m^2, (m/s)^2].
struct BoundTriple {
  double theta = 0.0;
  double distance = 0.0;
  double speed = 0.0;
};

/// Closed forms of the per-vehicle lower bounds; zero information yields an
/// infinite bound rather than an error.
BoundTriple lcrlb(const ZetaFim& zf);

/// Posterior variant: adds the prescribed prior entries. Throws
/// InfeasibleError when the d-nu information block is not positive definite.
BoundTriple lpcrlb(const ZetaFim& zf, const Eigen::Matrix3d& prior_block);

/// Full 3K x 3K u-space FIM via explicit per-subcarrier Jacobian columns,
/// including cross-vehicle blocks.
MatrixXcd fim_u_full(const SystemConfig& cfg, const ArrayLayout& layout,
                     const BeamformerSet& beams,
                     const std::vector<VehicleState>& vehicles);

/// zeta-space observed FIM: Q Re(J(u)) Q^T.
MatrixXd fim_zeta_full(const SystemConfig& cfg, const ArrayLayout& layout,
                       const BeamformerSet& beams,
                       const std::vector<VehicleState>& vehicles);

/// Prior FIM of the predicted state: (G Theta G^T + Sigma_zeta)^-1,
/// block-diagonal per vehicle. Throws ConditioningError when the predicted
/// covariance cannot be inverted reliably.
MatrixXd prior_fim(const TrackState& track, const MotionModel& motion);

/// Diagonal of the posterior inverse. Default mode inverts each vehicle's
/// 3x3 block of J_obs + J_prior (cross-vehicle terms dropped); exact mode inverts the
/// whole 3K x 3K matrix.
VectorXd pcrlb_diag(const MatrixXd& j_obs, const MatrixXd& j_prior,
                    bool exact_full_inverse = false);

/// Symmetric solve with a relative pivot guard; throws ConditioningError.
MatrixXd symmetric_inverse(const MatrixXd& m, const char* context);

}  // namespace maisac

#endif  // MAISAC_FIM_HPP
