// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_PSO_HPP
#define MAISAC_PSO_HPP

#include <map>
#include <optional>
#include <vector>

#include "maisac/beam_sdp.hpp"
#include "maisac/power.hpp"
#include "maisac/rng.hpp"
#include "maisac/types.hpp"

namespace maisac {

struct SwarmConfig {
  int particles = 10;       // N_p-bar
  int iterations = 20;      // Iter
  double w_min = 0.4;       // inertia bounds
  double w_max = 0.9;
  double c1 = 1.5;          // personal learning factor
  double c2 = 1.5;          // global learning factor
  double sf1 = 0.2;         // velocity clamp scale, in [0,1]
  double sf2 = 0.5;         // reflection attenuation, in [0,1]
  double sf3 = 0.3;         // pruning distance scale, in [0,1]
  double penalty = 100.0;   // iota > 0, per violating antenna pair
  int retention_threshold = 5;  // N_th
  std::uint64_t seed = 1;

  void validate() const;
};

struct Particle {
  VectorXd position;
  VectorXd velocity;
  VectorXd best_position;
  double best_fitness = 0.0;
  bool active = true;
};

/// Scenario data for the QoS-constrained transmit-position search.
struct RpdpsoInput {
  SystemConfig cfg;
  ArrayLayout layout;  // bounds and receive positions; tx entries are seeds
  VectorXd powers;     // uniform start for the inner beam stage
  std::vector<VehicleState> vehicles;
  std::vector<std::vector<int>> groups;
  std::vector<Eigen::Matrix3d> priors;
  std::vector<BoundTriple> thresholds;
  SdpConfig sdp;
};

struct FitnessDetail {
  double fitness = 0.0;  // -sum_rate + penalty * violations; +inf if infeasible
  double sum_rate = 0.0;
  int violations = 0;
  bool feasible = false;
  VectorXd powers;
  std::vector<VectorXcd> beams;
};

/// Inner solve per candidate position (QoS beams, then power), with results
/// cached on a lambda/1000 position grid.
class FitnessEvaluator {
 public:
  FitnessEvaluator(const RpdpsoInput& input, double penalty);
  FitnessDetail evaluate(const VectorXd& tx_positions) const;
  int solve_count() const { return solves_; }

 private:
  const RpdpsoInput& input_;
  double penalty_;
  mutable std::map<std::vector<long long>, FitnessDetail> cache_;
  mutable int solves_ = 0;
};

/// Number of antenna pairs closer than the minimum spacing.
int spacing_violations(const VectorXd& positions, double min_spacing);

/// One swarm update: inertia-weighted velocity with personal/global pulls,
/// velocity clamp, box clamp, and attenuated velocity reflection on the
/// dimensions that left the box.
void update_particle(Particle& particle, const VectorXd& global_best, int iter,
                     const SwarmConfig& cfg, double box_lo, double box_hi,
                     Rng& rng);

/// Spatial pruning with adaptive retention: prunes active particles farther
/// than sf3*(box span) from the global best while more than N_th are active;
/// replenishes to exactly N_th by sampling around retained best positions.
void prune_and_replenish(std::vector<Particle>& swarm,
                         const VectorXd& global_best, const SwarmConfig& cfg,
                         double box_lo, double box_hi, double min_spacing,
                         Rng& rng);

struct SwarmResult {
  VectorXd best_position;  // sorted ascending, spacing-feasible
  double best_fitness = 0.0;
  std::vector<double> trace;  // global best after init and each iteration
  FitnessDetail best_detail;
  int evaluations = 0;
};

/// RPDPSO main loop. Seeds one particle at the half-wavelength ULA and optionally
/// one at `warm_start`; the rest are uniform in the feasible box. Throws
/// InfeasibleError if no particle ever evaluates feasible.
SwarmResult run_rpdpso(const RpdpsoInput& input, const SwarmConfig& cfg,
                       const std::optional<VectorXd>& warm_start = {});

}  // namespace maisac

#endif  // MAISAC_PSO_HPP
