// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_ANTENNA_HPP
#define MAISAC_ANTENNA_HPP

#include <vector>

#include "maisac/fim.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Real trigonometric decomposition of one (vehicle, beam) pair:
/// f/s are cos/sin of the per-element steering phases, w = w_re + j w_im,
/// and A/U/T/D are the symmetric/antisymmetric outer-product combinations.
struct TrigForms {
  VectorXd f, s;
  VectorXd w_re, w_im;
  MatrixXd a_mat;  // f f^T + s s^T (symmetric)
  MatrixXd u_mat;  // f s^T - s f^T (antisymmetric)
  MatrixXd t_mat;  // w_re w_re^T + w_im w_im^T (symmetric)
  MatrixXd d_mat;  // w_re w_im^T - w_im w_re^T (antisymmetric)
};

TrigForms trig_forms(const VectorXd& positions, double theta, double wavelength,
                     const VectorXcd& w);

/// Quadratic forms in real arithmetic: xi = |a^H w|^2, xi1 = |a^H L w|^2,
/// xi2 = w^H L G w, xi3 = w^H G L w = conj(xi2), L = diag(positions).
struct XiTerms {
  double xi = 0.0;
  double xi1 = 0.0;
  cplx xi2{0.0, 0.0};
  cplx xi3{0.0, 0.0};
};

XiTerms xi_terms(const TrigForms& trig, const VectorXd& lambda_tx);

struct PgaConfig {
  double step_scale = 0.1;   // initial step in wavelengths per unit gradient
  int max_iterations = 200;  // outer ascent iterations
  double tolerance = 1e-7;   // relative objective improvement
  double armijo = 1e-4;
  bool literal_lower_anchor = false;  // anchor the clamp at D_max instead of D_min
  bool euclidean_projection = false;  // exact order-simplex projection instead
};

/// Weighted objective of the transmit-position problem at explicit beams:
/// rho * sum-rate + (1-rho) * aleph-weighted inverse posterior bounds.
double tx_objective(const SystemConfig& cfg, const ArrayLayout& layout,
                    const BeamformerSet& beams,
                    const std::vector<VehicleState>& vehicles, double rho,
                    const Eigen::Vector3d& aleph,
                    const std::vector<Eigen::Matrix3d>& priors);

/// Analytic gradient of tx_objective with respect to the transmit positions.
VectorXd grad_tx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles, double rho,
                 const Eigen::Vector3d& aleph,
                 const std::vector<Eigen::Matrix3d>& priors);

/// Receive-side objective: summed theta information (plus prior entries).
double rx_objective(const SystemConfig& cfg, const ArrayLayout& layout,
                    const BeamformerSet& beams,
                    const std::vector<VehicleState>& vehicles,
                    const std::vector<Eigen::Matrix3d>& priors);

VectorXd grad_rx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles);

/// Sequential left-to-right clamp; preserves ordering and spacing
/// for any candidate. Throws ConfigError when the region cannot hold M_tx
/// antennas at the minimum spacing.
VectorXd project_tx(const VectorXd& candidate, const ArrayLayout& layout,
                    bool literal_lower_anchor = false);

/// Right-anchored mirror clamp (processed right to left).
VectorXd project_rx(const VectorXd& candidate, const ArrayLayout& layout);

/// Exact Euclidean projection onto the ordered min-spacing box (isotonic
/// regression after a spacing shift, then a common clamp). Off by default;
/// the sequential clamps above are the standard update maps.
VectorXd project_ordered_euclidean(const VectorXd& candidate, double lower,
                                   double upper, double min_spacing);

struct PgaResult {
  VectorXd positions;
  std::vector<double> trace;  // objective after each accepted step
};

/// Projected gradient ascent over transmit positions with backtracking.
PgaResult pga_tx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles, double rho,
                 const Eigen::Vector3d& aleph,
                 const std::vector<Eigen::Matrix3d>& priors,
                 const PgaConfig& pga = {});

/// Projected gradient ascent over receive positions (theta information).
PgaResult pga_rx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles,
                 const std::vector<Eigen::Matrix3d>& priors,
                 const PgaConfig& pga = {});

}  // namespace maisac

#endif  // MAISAC_ANTENNA_HPP
