// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/orchestrator.hpp"

#include <chrono>
#include <cmath>

#include "maisac/model.hpp"

namespace maisac {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Eigen::Matrix3d> prior_blocks(const MatrixXd& j_prior) {
  std::vector<Eigen::Matrix3d> out;
  for (int k = 0; k < j_prior.rows() / 3; ++k)
    out.push_back(j_prior.block<3, 3>(3 * k, 3 * k));
  return out;
}

BeamformerSet assemble(const std::vector<VectorXcd>& beams, const VectorXd& p,
                       const std::vector<std::vector<int>>& groups) {
  BeamformerSet set;
  set.beams = beams;
  set.powers = p;
  set.groups = groups;
  return set;
}

// Maximize the concave outer objective along the segment p0 -> p1.
VectorXd segment_search(const std::function<double(const VectorXd&)>& f,
                        const VectorXd& p0, const VectorXd& p1) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (f(p0 + a * (p1 - p0)) < f(p0 + b * (p1 - p0)))
      lo = a;
    else
      hi = b;
  }
  const double t = 0.5 * (lo + hi);
  VectorXd best = p0 + t * (p1 - p0);
  double best_val = f(best);
  for (const VectorXd& cand : {p0, p1}) {
    const double v = f(cand);
    if (v > best_val) {
      best_val = v;
      best = cand;
    }
  }
  return best;
}

PowerProblem power_problem(const SystemConfig& cfg, const ArrayLayout& layout,
                           const std::vector<VectorXcd>& beams,
                           const std::vector<VehicleState>& vehicles,
                           const std::vector<std::vector<int>>& groups,
                           const std::vector<Eigen::Matrix3d>& priors,
                           const std::vector<BoundTriple>* thresholds) {
  PowerProblem pw;
  pw.budget = cfg.total_power;
  pw.gains = VectorXd::Zero(cfg.num_subcarriers);
  std::vector<int> owner(cfg.num_subcarriers, 0);
  for (int k = 0; k < static_cast<int>(groups.size()); ++k)
    for (int n : groups[k]) owner[n] = k;
  for (int n = 0; n < cfg.num_subcarriers; ++n) {
    const int k = owner[n];
    const VectorXcd a =
        steering(layout.tx_positions, vehicles[k].theta, cfg.wavelength);
    const double alpha = channel_gains(cfg, vehicles[k].distance).path_loss;
    pw.gains[n] = alpha * std::norm(a.dot(beams[n])) * cfg.useful_duration /
                  cfg.comm_noise_psd;
  }
  const VectorXd probe_powers =
      VectorXd::Constant(cfg.num_subcarriers, cfg.total_power / cfg.num_subcarriers);
  for (int k = 0; k < static_cast<int>(vehicles.size()); ++k) {
    PowerProblem::VehicleSensing vs;
    vs.blocks =
        g_blocks(cfg, layout, assemble(beams, probe_powers, groups), vehicles[k]);
    vs.weights = zeta_weights(cfg, vehicles[k]);
    vs.prior = k < static_cast<int>(priors.size()) ? priors[k]
                                                   : Eigen::Matrix3d::Zero();
    if (thresholds) vs.thresholds = (*thresholds)[k];
    pw.vehicles.push_back(vs);
  }
  return pw;
}

}  // namespace

std::vector<std::vector<int>> Scenario::effective_groups() const {
  if (!groups.empty()) return groups;
  return uniform_partition(cfg.num_subcarriers,
                           static_cast<int>(vehicles.size()));
}

void Scenario::validate() const {
  cfg.validate();
  layout.validate();
  if (!groups.empty()) {
    if (groups.size() != vehicles.size())
      throw DomainError("Scenario: subcarrier groups must match vehicle count");
    BeamformerSet probe;
    probe.beams.resize(cfg.num_subcarriers);
    probe.groups = groups;
    probe.owner_of_subcarrier();  // throws on overlap or gaps
  }
  if (horizon < 1) throw DomainError("Scenario: horizon must be >= 1");
  if (vehicles.empty()) throw DomainError("Scenario: no vehicles");
  if (objective.qos_mode() &&
      objective.thresholds.size() != vehicles.size())
    throw DomainError("Scenario: thresholds must match the vehicle count");
  for (const auto& v : vehicles) (void)derive_echo_params(cfg, v);
}

Eigen::Vector3d compute_aleph(const SystemConfig& cfg, const ArrayLayout& layout,
                              const BeamformerSet& beams,
                              const std::vector<VehicleState>& vehicles,
                              const std::vector<Eigen::Matrix3d>& priors) {
  Eigen::Vector3d raw = Eigen::Vector3d::Zero();
  for (int k = 0; k < static_cast<int>(vehicles.size()); ++k) {
    const FisherBlocks b = g_blocks(cfg, layout, beams, vehicles[k]);
    const ZetaFim zf = fim_zeta_block(cfg, b, vehicles[k], beams.powers);
    const Eigen::Matrix3d prior = k < static_cast<int>(priors.size())
                                      ? priors[k]
                                      : Eigen::Matrix3d::Zero();
    const BoundTriple bt = lpcrlb(zf, prior);
    raw[0] += 1.0 / bt.theta;
    raw[1] += 1.0 / bt.distance;
    raw[2] += 1.0 / bt.speed;
  }
  Eigen::Vector3d aleph;
  for (int i = 0; i < 3; ++i)
    aleph[i] = 1.0 / std::max(raw[i], 1e-300);
  return aleph;
}

AoResult run_p1_ao(const Scenario& scenario,
                   const std::optional<std::vector<VehicleState>>& states_in,
                   const std::optional<std::vector<Eigen::Matrix3d>>& priors_in,
                   const std::optional<Eigen::Vector3d>& fixed_aleph,
                   const std::optional<AoResult>& warm) {
  scenario.validate();
  const SystemConfig& cfg = scenario.cfg;
  const double rho = scenario.objective.rho;
  const auto groups = scenario.effective_groups();
  const std::vector<VehicleState> states =
      states_in ? *states_in : scenario.vehicles;

  std::vector<Eigen::Matrix3d> priors;
  if (priors_in) {
    priors = *priors_in;
  } else {
    const TrackState track =
        make_initial_track(states, scenario.init_sigma, scenario.seed);
    priors = prior_blocks(prior_fim(track, scenario.motion));
  }

  AoResult res;
  res.layout = warm ? warm->layout : scenario.layout;
  if (warm) {
    res.beams = warm->beams;
  } else {
    res.beams = matched_beams(cfg, res.layout, states);
    res.beams.groups = groups;
  }

  res.aleph = fixed_aleph
                  ? *fixed_aleph
                  : compute_aleph(cfg, res.layout, res.beams, states, priors);

  auto outer_objective = [&](const ArrayLayout& layout,
                             const BeamformerSet& beams) {
    return tx_objective(cfg, layout, beams, states, rho, res.aleph, priors);
  };

  double current = outer_objective(res.layout, res.beams);
  res.trace.push_back(current);

  const int max_outer = 100;
  for (int outer = 0; outer < max_outer; ++outer) {
    // Beamforming step (SDR + randomization), guarded for monotonicity.
    BeamProblem bp{cfg, res.layout, res.beams.powers, states, groups, priors};
    SdpConfig sdp = scenario.sdp;
    sdp.seed = scenario.seed + 1000003ull * (outer + 1);
    const RecoveredBeams rec = weighted_beamforming(bp, rho, res.aleph, sdp);
    {
      BeamformerSet cand = assemble(rec.beams, res.beams.powers, groups);
      const double val = outer_objective(res.layout, cand);
      if (val >= current) {
        res.beams = std::move(cand);
        current = val;
      }
    }

    // Power step: linear-sensing water level plus an exact segment guard on
    // the true concave objective.
    {
      PowerProblem pw = power_problem(cfg, res.layout, res.beams.beams, states,
                                      groups, priors, nullptr);
      const PowerResult pr = solve_power_weighted(pw, rho, res.aleph);
      auto f = [&](const VectorXd& p) {
        return outer_objective(res.layout,
                               assemble(res.beams.beams, p, groups));
      };
      const VectorXd chosen = segment_search(f, res.beams.powers, pr.p);
      const double val = f(chosen);
      if (val >= current) {
        res.beams.powers = chosen;
        current = val;
      }
    }

    // Transmit and receive projected gradient ascent.
    {
      const PgaResult tx = pga_tx(cfg, res.layout, res.beams, states, rho,
                                  res.aleph, priors, scenario.pga);
      ArrayLayout cand = res.layout;
      cand.tx_positions = tx.positions;
      const double val = outer_objective(cand, res.beams);
      if (val >= current) {
        res.layout = cand;
        current = val;
      }
    }
    if (rho < 1.0) {
      const PgaResult rx = pga_rx(cfg, res.layout, res.beams, states, priors,
                                  scenario.pga);
      ArrayLayout cand = res.layout;
      cand.rx_positions = rx.positions;
      const double val = outer_objective(cand, res.beams);
      if (val >= current) {
        res.layout = cand;
        current = val;
      }
    }

    const double prev = res.trace.back();
    res.trace.push_back(current);
    res.outer_iterations = outer + 1;
    if (current - prev <= 1e-4 * (1.0 + std::abs(current))) {
      res.converged = true;
      break;
    }
  }
  res.objective = current;
  return res;
}

namespace {

std::vector<SlotRecord> two_stage_impl(const Scenario& scenario, bool movable) {
  scenario.validate();
  if (!scenario.objective.qos_mode())
    throw DomainError("run_two_stage: QoS thresholds required");
  const SystemConfig& cfg = scenario.cfg;
  const auto groups = scenario.effective_groups();
  const auto& thresholds = scenario.objective.thresholds;
  const VectorXd uniform = VectorXd::Constant(
      cfg.num_subcarriers, cfg.total_power / cfg.num_subcarriers);

  std::vector<VehicleState> truth = scenario.vehicles;
  TrackState track =
      make_initial_track(truth, scenario.init_sigma, scenario.seed);
  ArrayLayout layout = scenario.layout;
  Rng motion_rng = Rng(scenario.seed).fork(0x6d6f7665ull);
  std::optional<VectorXd> warm_start;

  std::vector<SlotRecord> records;
  for (int m = 1; m <= scenario.horizon; ++m) {
    const auto t_start = std::chrono::steady_clock::now();
    SlotRecord rec;
    rec.slot = m;
    rec.seed = scenario.seed;

    // (a) EKF prediction provides the slot-m channel estimate and priors.
    const TrackState pred = ekf_predict(track, scenario.motion);
    const MatrixXd j_prior = prior_fim(track, scenario.motion);
    const std::vector<Eigen::Matrix3d> priors = prior_blocks(j_prior);
    const std::vector<VehicleState> pred_states = pred.vehicles();
    rec.predicted_state = pred_states;

    // (b) pre-optimize the transmit layout on the predicted channel.
    if (movable) {
      RpdpsoInput in{cfg,    layout, uniform,    pred_states,
                     groups, priors, thresholds, scenario.sdp};
      in.sdp.seed = scenario.seed + 17ull;
      SwarmConfig swarm = scenario.swarm;
      swarm.seed = scenario.seed;
      try {
        const SwarmResult sr = run_rpdpso(in, swarm, warm_start);
        layout.tx_positions = sr.best_position;
        warm_start = sr.best_position;
        rec.inner_iterations = sr.evaluations;
      } catch (const InfeasibleError&) {
        rec.feasible = false;  // keep the previous layout
      }
    }

    // (c) the world moves on.
    std::vector<VehicleState> next_truth;
    for (const auto& v : truth)
      next_truth.push_back(
          propagate_state(v, scenario.motion, sample_motion(scenario.motion, motion_rng)));
    truth = next_truth;
    rec.true_state = truth;

    // (d) refit beams and powers on the estimated channel.
    std::vector<VectorXcd> beams;
    VectorXd powers = uniform;
    try {
      BeamProblem bp{cfg, layout, uniform, pred_states, groups, priors};
      SdpConfig sdp = scenario.sdp;
      sdp.seed = scenario.seed + 31ull * m;
      const RecoveredBeams rb = qos_beamforming(bp, thresholds, sdp);
      beams = rb.beams;
      PowerProblem pw = power_problem(cfg, layout, beams, pred_states, groups,
                                      priors, &thresholds);
      const PowerResult pr = solve_power_qos(pw, scenario.sdp.contract);
      if (pr.status == SolveStatus::infeasible) {
        rec.feasible = false;
        powers = uniform;
      } else {
        powers = pr.p;
      }
    } catch (const InfeasibleError&) {
      rec.feasible = false;
      beams = matched_beams(cfg, layout, pred_states).beams;
    }
    if (beams.empty()) beams = matched_beams(cfg, layout, pred_states).beams;
    const BeamformerSet set = assemble(beams, powers, groups);
    rec.layout_used = layout;

    // Metrics at the operating (predicted) channel.
    rec.sum_rate = sum_rate(cfg, layout, set, pred_states);
    rec.sum_rate_per_subcarrier = rec.sum_rate / cfg.num_subcarriers;
    rec.objective = rec.sum_rate;
    for (int k = 0; k < static_cast<int>(pred_states.size()); ++k) {
      const FisherBlocks b = g_blocks(cfg, layout, set, pred_states[k]);
      const ZetaFim zf = fim_zeta_block(cfg, b, pred_states[k], powers);
      try {
        rec.lpcrlb.push_back(lpcrlb(zf, priors[k]));
      } catch (const InfeasibleError&) {
        rec.lpcrlb.push_back(BoundTriple{kInf, kInf, kInf});
        rec.feasible = false;
      }
    }
    const MatrixXd j_obs = fim_zeta_full(cfg, layout, set, pred_states);
    rec.pcrlb = pcrlb_diag(j_obs, j_prior, /*exact_full_inverse=*/true);

    // (e) sense the real world and track.
    const EchoMeasurement echo =
        synth_echo(cfg, layout, set, truth, scenario.seed + 1009ull * m);
    track = ekf_step(track, echo, cfg, layout, set, scenario.motion);
    rec.tracked_state = track.vehicles();
    rec.track_cov_diag = track.covariance.diagonal();

    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<SlotRecord> run_two_stage(const Scenario& scenario) {
  return two_stage_impl(scenario, scenario.movable);
}

std::vector<SlotRecord> baseline_ulah(const Scenario& scenario) {
  return two_stage_impl(scenario, false);
}

std::vector<TradeoffPoint> run_tradeoff_sweep(const Scenario& scenario,
                                              const std::vector<double>& rhos) {
  scenario.validate();
  const SystemConfig& cfg = scenario.cfg;
  const auto groups = scenario.effective_groups();

  const TrackState track =
      make_initial_track(scenario.vehicles, scenario.init_sigma, scenario.seed);
  const MatrixXd j_prior = prior_fim(track, scenario.motion);
  const std::vector<Eigen::Matrix3d> priors = prior_blocks(j_prior);

  // One normalization for the whole sweep keeps the weights comparable.
  BeamformerSet init = matched_beams(cfg, scenario.layout, scenario.vehicles);
  init.groups = groups;
  const Eigen::Vector3d aleph =
      compute_aleph(cfg, scenario.layout, init, scenario.vehicles, priors);

  std::vector<TradeoffPoint> points;
  std::optional<AoResult> warm;
  for (double rho : rhos) {
    Scenario s = scenario;
    s.objective.rho = rho;
    const AoResult ao =
        run_p1_ao(s, scenario.vehicles, priors, aleph, warm);
    warm = ao;

    TradeoffPoint pt;
    pt.rho = rho;
    pt.sum_rate = sum_rate(cfg, ao.layout, ao.beams, scenario.vehicles);
    for (int k = 0; k < static_cast<int>(scenario.vehicles.size()); ++k) {
      const FisherBlocks b =
          g_blocks(cfg, ao.layout, ao.beams, scenario.vehicles[k]);
      const ZetaFim zf =
          fim_zeta_block(cfg, b, scenario.vehicles[k], ao.beams.powers);
      pt.lpcrlb.push_back(lpcrlb(zf, priors[k]));
      pt.sensing_lpcrlb_metric += aleph[0] / pt.lpcrlb.back().theta +
                                  aleph[1] / pt.lpcrlb.back().distance +
                                  aleph[2] / pt.lpcrlb.back().speed;
    }
    const MatrixXd j_obs =
        fim_zeta_full(cfg, ao.layout, ao.beams, scenario.vehicles);
    pt.pcrlb = pcrlb_diag(j_obs, j_prior, /*exact_full_inverse=*/true);
    for (int k = 0; k < static_cast<int>(scenario.vehicles.size()); ++k) {
      pt.sensing_pcrlb_metric += aleph[0] / pt.pcrlb[3 * k] +
                                 aleph[1] / pt.pcrlb[3 * k + 1] +
                                 aleph[2] / pt.pcrlb[3 * k + 2];
    }
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace maisac
