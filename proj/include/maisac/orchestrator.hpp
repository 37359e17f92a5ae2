// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_ORCHESTRATOR_HPP
#define MAISAC_ORCHESTRATOR_HPP

#include <optional>
#include <string>
#include <vector>

#include "maisac/antenna.hpp"
#include "maisac/beam_sdp.hpp"
#include "maisac/ekf.hpp"
#include "maisac/power.hpp"
#include "maisac/pso.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Weighted-sum vs QoS mode selector: thresholds present iff QoS.
struct ObjectiveConfig {
  double rho = 0.5;
  std::vector<BoundTriple> thresholds;  // one per vehicle in QoS mode
  bool qos_mode() const { return !thresholds.empty(); }
};

struct Scenario {
  SystemConfig cfg;
  ArrayLayout layout;
  std::vector<VehicleState> vehicles;
  std::vector<std::vector<int>> groups;  // empty: uniform contiguous
  MotionModel motion;
  int horizon = 1;
  ObjectiveConfig objective;
  SdpConfig sdp;
  SwarmConfig swarm;
  PgaConfig pga;
  Eigen::Vector3d init_sigma = Eigen::Vector3d(1e-3, 1.0, 0.5);
  std::uint64_t seed = 1;
  bool movable = true;

  std::vector<std::vector<int>> effective_groups() const;
  void validate() const;
};

struct SlotRecord {
  int slot = 0;
  std::vector<VehicleState> true_state;
  std::vector<VehicleState> predicted_state;
  std::vector<VehicleState> tracked_state;
  ArrayLayout layout_used;
  double sum_rate = 0.0;  // bits over all subcarriers
  double sum_rate_per_subcarrier = 0.0;
  std::vector<BoundTriple> lpcrlb;  // per vehicle, at the predicted state
  VectorXd pcrlb;                   // exact posterior diagonal, 3K
  VectorXd track_cov_diag;          // EKF covariance diagonal, 3K
  double objective = 0.0;
  bool feasible = true;
  int inner_iterations = 0;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
};

struct AoResult {
  ArrayLayout layout;
  BeamformerSet beams;
  std::vector<double> trace;  // outer objective after each iteration
  double objective = 0.0;
  Eigen::Vector3d aleph;
  int outer_iterations = 0;
  bool converged = false;
};

/// PRE-SC-PGA: alternating beams / powers / transmit PGA /
/// receive PGA for the weighted-sum objective, with monotone guards so the
/// recorded trace never decreases. States default to the scenario's initial
/// vehicles; priors come from the one-step-predicted initial track.
AoResult run_p1_ao(const Scenario& scenario,
                   const std::optional<std::vector<VehicleState>>& states = {},
                   const std::optional<std::vector<Eigen::Matrix3d>>& priors = {},
                   const std::optional<Eigen::Vector3d>& fixed_aleph = {},
                   const std::optional<AoResult>& warm = {});

/// Two-stage predict / pre-optimize / refit loop over the scenario horizon
/// (QoS mode). On per-slot infeasibility the record is flagged and the
/// previous layout is reused.
std::vector<SlotRecord> run_two_stage(const Scenario& scenario);

/// Same loop with antenna movement disabled (half-wavelength ULA).
std::vector<SlotRecord> baseline_ulah(const Scenario& scenario);

struct TradeoffPoint {
  double rho = 0.0;
  double sum_rate = 0.0;
  double sensing_lpcrlb_metric = 0.0;  // aleph-weighted inverse bounds
  double sensing_pcrlb_metric = 0.0;
  std::vector<BoundTriple> lpcrlb;
  VectorXd pcrlb;
};

/// Weighted-sum sweep over rho values with warm-started continuation and a
/// single aleph normalization shared by every point.
std::vector<TradeoffPoint> run_tradeoff_sweep(const Scenario& scenario,
                                              const std::vector<double>& rhos);

/// Magnitude-one normalization of the sensing terms at the given iterate.
Eigen::Vector3d compute_aleph(const SystemConfig& cfg, const ArrayLayout& layout,
                              const BeamformerSet& beams,
                              const std::vector<VehicleState>& vehicles,
                              const std::vector<Eigen::Matrix3d>& priors);

}  // namespace maisac

#endif  // MAISAC_ORCHESTRATOR_HPP
