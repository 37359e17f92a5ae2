// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_BEAM_SDP_HPP
#define MAISAC_BEAM_SDP_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "maisac/fim.hpp"
#include "maisac/inner_point.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Beamforming subproblem data: everything except the beams themselves.
struct BeamProblem {
  SystemConfig cfg;
  ArrayLayout layout;
  VectorXd powers;
  std::vector<VehicleState> vehicles;
  std::vector<std::vector<int>> groups;
  std::vector<Eigen::Matrix3d> priors;  // prior FIM blocks; empty means zero
};

struct SdpConfig {
  SolverContract contract;
  int max_sca_iterations = 6;
  double sca_rel_tol = 1e-8;
  int randomize_samples = 100;
  std::uint64_t seed = 1;
};

/// Relaxed solution of the per-subcarrier lifted problem. The objective is
/// jointly concave after the Schur-complement lift, so the Taylor surrogate
/// of the SCA loop coincides with the objective and the loop settles in two
/// passes; both traces are reported so the majorization chain is checkable.
struct SdpSolution {
  std::vector<MatrixXcd> w_mats;
  VectorXd kappa, eps_d, eps_v;  // weighted-mode auxiliaries, size K
  double objective = 0.0;
  std::vector<double> trace;
  std::vector<double> surrogate_trace;
  SolveStatus status = SolveStatus::max_iter;
  double gap = 0.0;
  int newton_steps = 0;
};

/// Weighted-sum beam step: rho-weighted sum-rate plus aleph-weighted
/// information auxiliaries, under unit-diagonal PSD lifts and the sensing
/// LMIs. rho in [0,1]; rho = 1 drops the sensing machinery entirely.
SdpSolution sca_solve_weighted(const BeamProblem& prob, double rho,
                               const Eigen::Vector3d& aleph,
                               const SdpConfig& cfg = {});

/// QoS beam step: sum-rate maximization under hard LPCRLB LMIs.
/// Throws InfeasibleError naming the tightest constraint.
SdpSolution sca_solve_qos(const BeamProblem& prob,
                          const std::vector<BoundTriple>& thresholds,
                          const SdpConfig& cfg = {});

/// Rank-one recovery for a single lifted matrix: draws CN(0, W) samples,
/// projects entrywise to unit modulus and returns the best-scoring feasible
/// candidate (ties break to the lowest candidate index). Deterministic per
/// seed. `feasible` may be empty.
VectorXcd gaussian_randomize(
    const MatrixXcd& w_mat, int samples, std::uint64_t seed,
    const std::function<double(const VectorXcd&)>& objective,
    const std::function<bool(const VectorXcd&)>& feasible = {});

/// Scoring helper shared by recovery and the orchestrator: evaluates the
/// weighted objective and per-vehicle posterior bounds for explicit beams.
class BeamObjective {
 public:
  BeamObjective(const BeamProblem& prob);

  double rate(const std::vector<VectorXcd>& beams) const;
  double weighted(const std::vector<VectorXcd>& beams, double rho,
                  const Eigen::Vector3d& aleph) const;
  /// Sum over vehicles and parameters of aleph-weighted inverse bounds.
  double sensing_score(const std::vector<VectorXcd>& beams,
                       const Eigen::Vector3d& aleph) const;
  BoundTriple bounds(const std::vector<VectorXcd>& beams, int vehicle) const;
  bool meets(const std::vector<VectorXcd>& beams,
             const std::vector<BoundTriple>& thresholds, double slack) const;

  const BeamProblem& problem() const { return prob_; }

 private:
  BeamProblem prob_;
  std::vector<VectorXcd> a_tx_;
  std::vector<GCoefficients> coef_;
  std::vector<ZetaWeights> weights_;
  std::vector<double> rate_coef_;  // per subcarrier: alpha_k p_n T_e / eta0
  std::vector<int> owner_;
};

struct RecoveredBeams {
  std::vector<VectorXcd> beams;
  double objective = 0.0;           // recovered-space objective
  double relaxed_objective = 0.0;   // SDP optimum (upper bound)
  std::vector<BoundTriple> achieved;
  SdpSolution relaxation;
};

/// Full weighted beam stage: SDP + sequential per-subcarrier randomization
/// against the global weighted objective.
RecoveredBeams weighted_beamforming(const BeamProblem& prob, double rho,
                                    const Eigen::Vector3d& aleph,
                                    const SdpConfig& cfg = {});

/// Full QoS beam stage. Candidates violating the sensing thresholds (with
/// `slack` relative headroom) are discarded during ranking; if the recovered
/// set still misses a threshold by more than `slack`, the SDP is re-solved
/// with proportionally tightened thresholds (up to `max_rounds`).
RecoveredBeams qos_beamforming(const BeamProblem& prob,
                               const std::vector<BoundTriple>& thresholds,
                               const SdpConfig& cfg = {}, double slack = 0.05,
                               int max_rounds = 3);

}  // namespace maisac

#endif  // MAISAC_BEAM_SDP_HPP
