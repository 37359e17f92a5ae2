// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_POWER_HPP
#define MAISAC_POWER_HPP

#include <string>
#include <vector>

#include "maisac/fim.hpp"
#include "maisac/inner_point.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Per-subcarrier power optimization instance. `gains` holds the effective
/// rate gain of each subcarrier for its owning user,
/// g_n = alpha_k |a^H w_n|^2 T_e / eta0. Sensing data is per vehicle and
/// already expressed as information-per-unit-power vectors.
struct PowerProblem {
  VectorXd gains;
  double budget = 1.0;

  struct VehicleSensing {
    FisherBlocks blocks;
    ZetaWeights weights;
    Eigen::Matrix3d prior = Eigen::Matrix3d::Zero();
    BoundTriple thresholds;  // QoS mode only
  };
  std::vector<VehicleSensing> vehicles;
};

/// 2x2 LMI certificates: psi_d (psi_v) is PSD exactly when the distance
/// (velocity) LPCRLB meets its threshold, given positive denominators.
struct PsiMatrices {
  Eigen::Matrix2d psi_d;
  Eigen::Matrix2d psi_v;
};

PsiMatrices psi_matrices(const FisherBlocks& blocks,
                         const Eigen::Matrix3d& prior, const ZetaWeights& w,
                         double threshold_d, double threshold_v,
                         const VectorXd& p);

struct PowerResult {
  VectorXd p;
  double objective = 0.0;  // rate part at the solution [bits]
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::optimal;
  std::string note;  // most-violated constraint on infeasibility, warnings
};

/// Water-filling closed form: p_n = max(0, 1/((lambda1 - j) ln2) - 1/g_n)
/// with lambda1 found by bisection to meet the budget. Zero-gain subcarriers
/// receive zero power; all-zero gains fall back to uniform with a warning.
PowerResult waterfill(const VectorXd& gains, double budget,
                      double sensing_multiplier);

/// Sum-rate maximization under the sensing LMIs. Throws nothing;
/// infeasibility is reported through status/note.
PowerResult solve_power_qos(const PowerProblem& prob,
                            const SolverContract& contract = {});

/// Weighted-sum power step: rho * sum log2(1+g p) + (1-rho) * linear sensing
/// terms, solved by exact KKT water level. `aleph` weighs the theta/d/nu
/// information terms.
PowerResult solve_power_weighted(const PowerProblem& prob, double rho,
                                 const Eigen::Vector3d& aleph);

/// Per-subcarrier linear sensing coefficients used by the weighted step.
VectorXd weighted_sensing_coefficients(const PowerProblem& prob,
                                       const Eigen::Vector3d& aleph);

}  // namespace maisac

#endif  // MAISAC_POWER_HPP
