// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/types.hpp"

#include <cmath>

namespace maisac {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace

void SystemConfig::validate() const {
  if (num_subcarriers < 1 || num_blocks < 1)
    throw DomainError("SystemConfig: N and Q must be >= 1");
  if (!finite_positive(wavelength) || !finite_positive(subcarrier_spacing) ||
      !finite_positive(symbol_duration) || !finite_positive(useful_duration) ||
      !finite_positive(comm_noise_psd) || !finite_positive(radar_noise_psd) ||
      !finite_positive(total_power) || !finite_positive(rcs) ||
      !finite_positive(ref_path_loss) || !finite_positive(ref_distance) ||
      !finite_positive(lightspeed))
    throw DomainError("SystemConfig: durations, powers and PSDs must be positive");
  if (cyclic_prefix < 0.0)
    throw DomainError("SystemConfig: cyclic prefix must be nonnegative");
  const double ts = useful_duration + cyclic_prefix;
  if (std::abs(ts - symbol_duration) > 1e-9 * symbol_duration)
    throw DomainError("SystemConfig: T_s must equal T_e + T_cp");
  if (std::abs(subcarrier_spacing * useful_duration - 1.0) > 1e-9)
    throw DomainError("SystemConfig: delta_f must equal 1/T_e");
}

void ArrayLayout::validate() const {
  auto check_side = [this](const VectorXd& p, double lo, double hi,
                           const char* side) {
    if (p.size() < 1) throw DomainError(std::string(side) + ": empty array");
    for (int i = 0; i < p.size(); ++i) {
      if (!std::isfinite(p[i]))
        throw DomainError(std::string(side) + ": non-finite position");
      if (p[i] < lo - 1e-12 || p[i] > hi + 1e-12)
        throw DomainError(std::string(side) + ": position outside feasible region");
    }
    for (int i = 1; i < p.size(); ++i) {
      if (p[i] - p[i - 1] < min_spacing - 1e-12)
        throw DomainError(std::string(side) + ": adjacent spacing below D_sp");
    }
  };
  check_side(tx_positions, tx_min, tx_max, "tx");
  check_side(rx_positions, rx_min, rx_max, "rx");
  if (rx_min - tx_max < tx_rx_gap - 1e-12)
    throw DomainError("layout: transmit/receive separation below D_tr");
}

ArrayLayout ArrayLayout::ula(int m_tx, int m_rx, double wavelength,
                             double tx_region, double rx_region) {
  ArrayLayout out;
  const double half = wavelength / 2.0;
  out.min_spacing = half;
  out.tx_rx_gap = half;
  out.tx_min = 0.0;
  out.tx_max = tx_region;
  out.rx_min = out.tx_max + out.tx_rx_gap;
  out.rx_max = out.rx_min + rx_region;
  if (tx_region < (m_tx - 1) * half || rx_region < (m_rx - 1) * half)
    throw ConfigError("ArrayLayout::ula: feasible region too small for array");
  out.tx_positions = VectorXd::LinSpaced(m_tx, 0.0, (m_tx - 1) * half);
  out.tx_positions.array() += out.tx_min;
  out.rx_positions = VectorXd::LinSpaced(m_rx, 0.0, (m_rx - 1) * half);
  out.rx_positions.array() += out.rx_min;
  return out;
}

EchoParams derive_echo_params(const SystemConfig& cfg, const VehicleState& v) {
  if (!(v.distance > 0.0)) throw DomainError("vehicle distance must be positive");
  if (!(v.theta > 0.0 && v.theta < kPi))
    throw DomainError("vehicle theta must lie in (0, pi)");
  EchoParams p;
  p.path_loss = cfg.ref_path_loss *
                std::pow(v.distance / cfg.ref_distance, -cfg.path_loss_exponent);
  const double lam2 = cfg.wavelength * cfg.wavelength;
  const double four_pi_cubed = std::pow(4.0 * kPi, 3.0);
  const double half_d4 = std::pow(v.distance / 2.0, 4.0);
  p.attenuation = std::sqrt(lam2 * cfg.rcs / (four_pi_cubed * half_d4));
  p.gamma = p.attenuation * cfg.useful_duration;
  p.cos_theta = std::cos(v.theta);
  p.doppler = 2.0 * p.cos_theta * v.speed / cfg.wavelength;
  p.delay = 2.0 * v.distance / cfg.lightspeed;
  return p;
}

std::vector<int> BeamformerSet::owner_of_subcarrier() const {
  std::vector<int> owner(beams.size(), -1);
  for (int k = 0; k < static_cast<int>(groups.size()); ++k) {
    for (int n : groups[k]) {
      if (n < 0 || n >= static_cast<int>(beams.size()))
        throw DomainError("BeamformerSet: subcarrier index out of range");
      if (owner[n] != -1)
        throw DomainError("BeamformerSet: subcarrier groups overlap");
      owner[n] = k;
    }
  }
  for (int n = 0; n < static_cast<int>(owner.size()); ++n) {
    if (owner[n] == -1)
      throw DomainError("BeamformerSet: subcarrier groups do not cover 0..N-1");
  }
  return owner;
}

void BeamformerSet::validate(const SystemConfig& cfg) const {
  if (static_cast<int>(beams.size()) != cfg.num_subcarriers ||
      powers.size() != cfg.num_subcarriers)
    throw DomainError("BeamformerSet: size mismatch with config");
  for (const auto& w : beams) {
    for (int l = 0; l < w.size(); ++l) {
      if (std::abs(std::abs(w[l]) - 1.0) > 1e-9)
        throw DomainError("BeamformerSet: beam entry not unit modulus");
    }
  }
  double total = 0.0;
  for (int n = 0; n < powers.size(); ++n) {
    if (powers[n] < -1e-12) throw DomainError("BeamformerSet: negative power");
    total += powers[n];
  }
  if (total > cfg.total_power * (1.0 + 1e-9))
    throw DomainError("BeamformerSet: power budget exceeded");
  owner_of_subcarrier();  // checks partition
}

std::vector<std::vector<int>> uniform_partition(int n, int k) {
  if (k < 1 || n < k) throw DomainError("uniform_partition: need n >= k >= 1");
  std::vector<std::vector<int>> groups(k);
  const int base = n / k;
  int rem = n % k;
  int next = 0;
  for (int g = 0; g < k; ++g) {
    int len = base + (g < rem ? 1 : 0);
    for (int i = 0; i < len; ++i) groups[g].push_back(next++);
  }
  return groups;
}

}  // namespace maisac
