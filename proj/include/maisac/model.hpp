// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_MODEL_HPP
#define MAISAC_MODEL_HPP

#include <cstdint>
#include <vector>

#include "maisac/rng.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Far-field steering vector: entry l is exp(j 2 pi p_l cos(theta) / lambda).
/// theta must lie in (0, pi); used for both transmit and receive arrays.
VectorXcd steering(const VectorXd& positions, double theta, double wavelength);

struct ChannelGains {
  double path_loss;    // alpha
  double attenuation;  // beta
  double gamma;        // beta * T_e
};

/// alpha = alpha0 (d/d0)^-xi, beta = sqrt(lambda^2 RCS / ((4 pi)^3 (d/2)^4)),
/// gamma = beta T_e. Throws DomainError for d <= 0.
ChannelGains channel_gains(const SystemConfig& cfg, double distance);

/// Downlink sum-rate over all users and their subcarriers [bits/symbol]:
/// sum_k sum_{n in N_k} log2(1 + alpha_k |a^H w_n|^2 p_n T_e / eta0).
double sum_rate(const SystemConfig& cfg, const ArrayLayout& layout,
                const BeamformerSet& beams,
                const std::vector<VehicleState>& vehicles);

/// Noiseless stacked echo for explicit echo parameters. Per (n, q):
///   sum_k gamma_k p_n b(p_rx, .) a(p_tx, .)^H w_n
///         exp(-j 2 pi n df tau_k) exp(j 2 pi mu_k (q-1) T_s)
/// Steering phases are evaluated from cos_theta in `params`, so the stack is
/// a function of u_k = (cos_theta_k, tau_k, mu_k) with gamma_k held fixed.
VectorXcd echo_noiseless_stack(const SystemConfig& cfg,
                               const ArrayLayout& layout,
                               const BeamformerSet& beams,
                               const std::vector<EchoParams>& params);

/// Post-matched-filter echo with circular complex Gaussian noise of
/// per-subcarrier covariance p_n eta1 T_e I. Deterministic given seed.
EchoMeasurement synth_echo(const SystemConfig& cfg, const ArrayLayout& layout,
                           const BeamformerSet& beams,
                           const std::vector<VehicleState>& vehicles,
                           std::uint64_t rng_seed);

/// Matched per-subcarrier beams (conjugate steering phases towards the
/// owning user) with uniform power P_T/N and a uniform contiguous partition.
BeamformerSet matched_beams(const SystemConfig& cfg, const ArrayLayout& layout,
                            const std::vector<VehicleState>& vehicles);

}  // namespace maisac

#endif  // MAISAC_MODEL_HPP
