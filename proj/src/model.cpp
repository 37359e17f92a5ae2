// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/model.hpp"

#include <cmath>

namespace maisac {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

VectorXcd steering_from_cos(const VectorXd& positions, double cos_theta,
                            double wavelength) {
  VectorXcd a(positions.size());
  const double c = kTwoPi * cos_theta / wavelength;
  for (int l = 0; l < positions.size(); ++l) {
    const double phase = c * positions[l];
    a[l] = cplx(std::cos(phase), std::sin(phase));
  }
  return a;
}
}  // namespace

VectorXcd steering(const VectorXd& positions, double theta, double wavelength) {
  if (!(theta > 0.0 && theta < kPi))
    throw DomainError("steering: theta must lie in (0, pi)");
  for (int l = 0; l < positions.size(); ++l) {
    if (!std::isfinite(positions[l]))
      throw DomainError("steering: non-finite position");
  }
  return steering_from_cos(positions, std::cos(theta), wavelength);
}

ChannelGains channel_gains(const SystemConfig& cfg, double distance) {
  VehicleState v;
  v.distance = distance;
  v.theta = kPi / 2.0;  // irrelevant to the gains
  const EchoParams p = derive_echo_params(cfg, v);
  return ChannelGains{p.path_loss, p.attenuation, p.gamma};
}

double sum_rate(const SystemConfig& cfg, const ArrayLayout& layout,
                const BeamformerSet& beams,
                const std::vector<VehicleState>& vehicles) {
  const auto owner = beams.owner_of_subcarrier();
  std::vector<VectorXcd> a(vehicles.size());
  std::vector<double> alpha(vehicles.size());
  for (size_t k = 0; k < vehicles.size(); ++k) {
    a[k] = steering(layout.tx_positions, vehicles[k].theta, cfg.wavelength);
    alpha[k] = channel_gains(cfg, vehicles[k].distance).path_loss;
  }
  const double scale = cfg.useful_duration / cfg.comm_noise_psd;
  double rate = 0.0;
  for (int n = 0; n < beams.num_subcarriers(); ++n) {
    const int k = owner[n];
    const cplx g = a[k].dot(beams.beams[n]);  // a^H w
    const double snr = alpha[k] * std::norm(g) * beams.powers[n] * scale;
    rate += std::log2(1.0 + snr);
  }
  return rate;
}

VectorXcd echo_noiseless_stack(const SystemConfig& cfg,
                               const ArrayLayout& layout,
                               const BeamformerSet& beams,
                               const std::vector<EchoParams>& params) {
  const int m_rx = layout.num_rx();
  const int q_blocks = cfg.num_blocks;
  const int n_sub = cfg.num_subcarriers;
  VectorXcd stack = VectorXcd::Zero(static_cast<Eigen::Index>(m_rx) * q_blocks * n_sub);
  for (const EchoParams& pk : params) {
    const VectorXcd b =
        steering_from_cos(layout.rx_positions, pk.cos_theta, cfg.wavelength);
    const VectorXcd a =
        steering_from_cos(layout.tx_positions, pk.cos_theta, cfg.wavelength);
    for (int n = 0; n < n_sub; ++n) {
      const cplx aw = a.dot(beams.beams[n]);  // a^H w_n
      const double dphase = -kTwoPi * n * cfg.subcarrier_spacing * pk.delay;
      const cplx delay_rot(std::cos(dphase), std::sin(dphase));
      const cplx base = pk.gamma * beams.powers[n] * aw * delay_rot;
      for (int q = 0; q < q_blocks; ++q) {
        const double mphase = kTwoPi * pk.doppler * q * cfg.symbol_duration;
        const cplx dop_rot(std::cos(mphase), std::sin(mphase));
        const cplx coef = base * dop_rot;
        const int off = n * (m_rx * q_blocks) + q * m_rx;
        for (int r = 0; r < m_rx; ++r) stack[off + r] += coef * b[r];
      }
    }
  }
  return stack;
}

EchoMeasurement synth_echo(const SystemConfig& cfg, const ArrayLayout& layout,
                           const BeamformerSet& beams,
                           const std::vector<VehicleState>& vehicles,
                           std::uint64_t rng_seed) {
  std::vector<EchoParams> params;
  params.reserve(vehicles.size());
  for (const auto& v : vehicles) params.push_back(derive_echo_params(cfg, v));

  EchoMeasurement echo;
  echo.m_rx = layout.num_rx();
  echo.num_blocks = cfg.num_blocks;
  echo.num_subcarriers = cfg.num_subcarriers;
  echo.samples = echo_noiseless_stack(cfg, layout, beams, params);
  echo.noise_var = VectorXd(cfg.num_subcarriers);

  Rng rng = Rng(rng_seed).fork(0x65636861ull);  // echo stream
  for (int n = 0; n < cfg.num_subcarriers; ++n) {
    const double var = beams.powers[n] * cfg.radar_noise_psd * cfg.useful_duration;
    echo.noise_var[n] = var;
    const double sigma = std::sqrt(var / 2.0);
    const int off = n * (echo.m_rx * echo.num_blocks);
    for (int i = 0; i < echo.m_rx * echo.num_blocks; ++i) {
      echo.samples[off + i] += cplx(sigma * rng.normal(), sigma * rng.normal());
    }
  }
  return echo;
}

BeamformerSet matched_beams(const SystemConfig& cfg, const ArrayLayout& layout,
                            const std::vector<VehicleState>& vehicles) {
  BeamformerSet set;
  set.groups = uniform_partition(cfg.num_subcarriers,
                                 static_cast<int>(vehicles.size()));
  set.powers = VectorXd::Constant(cfg.num_subcarriers,
                                  cfg.total_power / cfg.num_subcarriers);
  set.beams.resize(cfg.num_subcarriers);
  std::vector<VectorXcd> a(vehicles.size());
  for (size_t k = 0; k < vehicles.size(); ++k)
    a[k] = steering(layout.tx_positions, vehicles[k].theta, cfg.wavelength);
  const auto owner = [&] {
    std::vector<int> o(cfg.num_subcarriers, 0);
    for (int k = 0; k < static_cast<int>(set.groups.size()); ++k)
      for (int n : set.groups[k]) o[n] = k;
    return o;
  }();
  for (int n = 0; n < cfg.num_subcarriers; ++n) {
    set.beams[n] = a[owner[n]];  // |a^H w| = M_tx, entries unit modulus
  }
  return set;
}

}  // namespace maisac
