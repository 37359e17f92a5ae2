// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/pso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maisac/model.hpp"

namespace maisac {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void SwarmConfig::validate() const {
  if (particles < 2) throw DomainError("SwarmConfig: need at least 2 particles");
  if (w_min > w_max) throw DomainError("SwarmConfig: w_min must be <= w_max");
  for (double sf : {sf1, sf2, sf3})
    if (!(sf >= 0.0 && sf <= 1.0))
      throw DomainError("SwarmConfig: scale factors must lie in [0, 1]");
  if (!(penalty > 0.0)) throw DomainError("SwarmConfig: penalty must be positive");
  if (iterations < 0) throw DomainError("SwarmConfig: negative iterations");
}

int spacing_violations(const VectorXd& positions, double min_spacing) {
  int count = 0;
  for (int i = 0; i < positions.size(); ++i)
    for (int j = i + 1; j < positions.size(); ++j)
      if (std::abs(positions[i] - positions[j]) < min_spacing - 1e-12) ++count;
  return count;
}

FitnessEvaluator::FitnessEvaluator(const RpdpsoInput& input, double penalty)
    : input_(input), penalty_(penalty) {}

FitnessDetail FitnessEvaluator::evaluate(const VectorXd& tx_positions) const {
  // Quantized cache key on a lambda/1000 grid.
  const double quantum = input_.cfg.wavelength / 1000.0;
  std::vector<long long> key(tx_positions.size());
  for (int l = 0; l < tx_positions.size(); ++l)
    key[l] = llround(tx_positions[l] / quantum);
  const auto hit = cache_.find(key);
  if (hit != cache_.end()) return hit->second;

  FitnessDetail out;
  out.violations =
      spacing_violations(tx_positions, input_.layout.min_spacing);

  BeamProblem prob;
  prob.cfg = input_.cfg;
  prob.layout = input_.layout;
  prob.layout.tx_positions = tx_positions;
  prob.powers = input_.powers;
  prob.vehicles = input_.vehicles;
  prob.groups = input_.groups;
  prob.priors = input_.priors;

  ++solves_;
  try {
    const RecoveredBeams beams =
        qos_beamforming(prob, input_.thresholds, input_.sdp);

    PowerProblem pw;
    pw.budget = input_.cfg.total_power;
    pw.gains = VectorXd::Zero(input_.cfg.num_subcarriers);
    std::vector<int> owner(input_.cfg.num_subcarriers, 0);
    for (int k = 0; k < static_cast<int>(input_.groups.size()); ++k)
      for (int n : input_.groups[k]) owner[n] = k;
    for (int n = 0; n < input_.cfg.num_subcarriers; ++n) {
      const int k = owner[n];
      const VectorXcd a = steering(prob.layout.tx_positions,
                                   input_.vehicles[k].theta,
                                   input_.cfg.wavelength);
      const double alpha =
          channel_gains(input_.cfg, input_.vehicles[k].distance).path_loss;
      pw.gains[n] = alpha * std::norm(a.dot(beams.beams[n])) *
                    input_.cfg.useful_duration / input_.cfg.comm_noise_psd;
    }
    for (int k = 0; k < static_cast<int>(input_.vehicles.size()); ++k) {
      PowerProblem::VehicleSensing vs;
      vs.blocks = g_blocks(input_.cfg, prob.layout,
                           BeamformerSet{beams.beams, input_.powers,
                                         input_.groups},
                           input_.vehicles[k]);
      vs.weights = zeta_weights(input_.cfg, input_.vehicles[k]);
      vs.prior = k < static_cast<int>(input_.priors.size())
                     ? input_.priors[k]
                     : Eigen::Matrix3d::Zero();
      vs.thresholds = input_.thresholds[k];
      pw.vehicles.push_back(vs);
    }
    const PowerResult pr = solve_power_qos(pw, input_.sdp.contract);
    if (pr.status == SolveStatus::infeasible) {
      out.fitness = kInf;
      out.feasible = false;
    } else {
      out.feasible = true;
      out.sum_rate = pr.objective;
      out.powers = pr.p;
      out.beams = beams.beams;
      out.fitness = -out.sum_rate + penalty_ * out.violations;
    }
  } catch (const InfeasibleError&) {
    out.fitness = kInf;
    out.feasible = false;
  }
  cache_[key] = out;
  return out;
}

void update_particle(Particle& particle, const VectorXd& global_best, int iter,
                     const SwarmConfig& cfg, double box_lo, double box_hi,
                     Rng& rng) {
  const int dim = static_cast<int>(particle.position.size());
  const double inertia =
      cfg.w_max - (static_cast<double>(iter) / std::max(1, cfg.iterations)) *
                      (cfg.w_max - cfg.w_min);
  const double v_max = cfg.sf1 * (box_hi - box_lo);
  for (int d = 0; d < dim; ++d) {
    const double e1 = rng.uniform();
    const double e2 = rng.uniform();
    double v = inertia * particle.velocity[d] +
               cfg.c1 * e1 * (particle.best_position[d] - particle.position[d]) +
               cfg.c2 * e2 * (global_best[d] - particle.position[d]);
    v = std::clamp(v, -v_max, v_max);
    const double raw = particle.position[d] + v;
    if (raw > box_hi || raw < box_lo) {
      particle.position[d] = std::clamp(raw, box_lo, box_hi);
      v = -cfg.sf2 * v;  // reversed, attenuated reflection
    } else {
      particle.position[d] = raw;
    }
    particle.velocity[d] = v;
  }
}

void prune_and_replenish(std::vector<Particle>& swarm,
                         const VectorXd& global_best, const SwarmConfig& cfg,
                         double box_lo, double box_hi, double min_spacing,
                         Rng& rng) {
  const double threshold = cfg.sf3 * std::abs(box_hi - box_lo);
  int active = 0;
  for (const auto& p : swarm) active += p.active ? 1 : 0;

  if (active > cfg.retention_threshold) {
    for (auto& p : swarm) {
      if (!p.active) continue;
      if (active <= cfg.retention_threshold) break;
      if ((p.position - global_best).norm() > threshold) {
        p.active = false;
        --active;
      }
    }
  }

  if (active < cfg.retention_threshold) {
    // Retained bests, ordered by fitness.
    std::vector<int> retained;
    for (int i = 0; i < static_cast<int>(swarm.size()); ++i)
      if (swarm[i].active) retained.push_back(i);
    std::sort(retained.begin(), retained.end(), [&](int a, int b) {
      return swarm[a].best_fitness < swarm[b].best_fitness;
    });
    for (auto& p : swarm) {
      if (active >= cfg.retention_threshold) break;
      if (p.active) continue;
      VectorXd center = global_best;
      if (!retained.empty()) {
        const int pick = static_cast<int>(
            rng.uniform() * static_cast<double>(retained.size()));
        center = swarm[retained[std::min(
                           pick, static_cast<int>(retained.size()) - 1)]]
                     .best_position;
      }
      for (int d = 0; d < p.position.size(); ++d) {
        p.position[d] = std::clamp(
            center[d] + rng.uniform(-min_spacing, min_spacing), box_lo, box_hi);
      }
      p.velocity.setZero();
      p.best_position = p.position;
      p.best_fitness = kInf;
      p.active = true;
      ++active;
    }
  }
}

SwarmResult run_rpdpso(const RpdpsoInput& input, const SwarmConfig& cfg,
                       const std::optional<VectorXd>& warm_start) {
  cfg.validate();
  const int m_tx = input.layout.num_tx();
  const double lo = input.layout.tx_min;
  const double hi = input.layout.tx_max;
  const Rng root(cfg.seed);
  const FitnessEvaluator fitness(input, cfg.penalty);

  std::vector<Particle> swarm(cfg.particles);
  for (int i = 0; i < cfg.particles; ++i) {
    Particle& p = swarm[i];
    p.position = VectorXd(m_tx);
    p.velocity = VectorXd::Zero(m_tx);
    if (i == 0) {
      // Half-wavelength ULA anchored at the lower bound.
      for (int l = 0; l < m_tx; ++l)
        p.position[l] = lo + l * input.cfg.wavelength / 2.0;
    } else if (i == 1 && warm_start && warm_start->size() == m_tx) {
      p.position = *warm_start;
    } else {
      Rng r = root.fork(0x696e6974ull, i);
      for (int l = 0; l < m_tx; ++l) p.position[l] = r.uniform(lo, hi);
    }
    for (int l = 0; l < m_tx; ++l)
      p.position[l] = std::clamp(p.position[l], lo, hi);
  }

  SwarmResult res;
  res.best_fitness = kInf;
  auto consider = [&](const Particle& p, const FitnessDetail& d) {
    if (d.fitness < res.best_fitness) {
      res.best_fitness = d.fitness;
      res.best_position = p.position;
      res.best_detail = d;
    }
  };

  for (auto& p : swarm) {
    const FitnessDetail d = fitness.evaluate(p.position);
    p.best_position = p.position;
    p.best_fitness = d.fitness;
    consider(p, d);
  }
  res.trace.push_back(res.best_fitness);

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    for (int i = 0; i < cfg.particles; ++i) {
      Particle& p = swarm[i];
      if (!p.active) continue;
      if (!std::isfinite(res.best_fitness)) {
        // No global best yet: pull toward the particle's own best only.
        Rng r = root.fork(iter, i);
        update_particle(p, p.best_position, iter, cfg, lo, hi, r);
      } else {
        Rng r = root.fork(iter, i);
        update_particle(p, res.best_position, iter, cfg, lo, hi, r);
      }
      const FitnessDetail d = fitness.evaluate(p.position);
      if (d.fitness < p.best_fitness) {
        p.best_fitness = d.fitness;
        p.best_position = p.position;
      }
      consider(p, d);
    }
    if (std::isfinite(res.best_fitness)) {
      Rng r = root.fork(0x7072756eull, iter);
      prune_and_replenish(swarm, res.best_position, cfg, lo, hi,
                          input.layout.min_spacing, r);
    }
    res.trace.push_back(res.best_fitness);
  }

  res.evaluations = fitness.solve_count();
  if (!std::isfinite(res.best_fitness))
    throw InfeasibleError("run_rpdpso: no feasible particle found",
                          "qos_thresholds");

  std::sort(res.best_position.begin(), res.best_position.end());
  return res;
}

}  // namespace maisac
