// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_TYPES_HPP
#define MAISAC_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace maisac {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Input outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix factorization or inversion failed its conditioning guard.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constrained problem has an empty feasible set. `constraint_name()`
/// identifies the tightest / most violated constraint.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::string constraint)
      : std::runtime_error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint_name() const { return constraint_; }

 private:
  std::string constraint_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Waveform, noise and carrier constants shared by every module.
struct SystemConfig {
  double wavelength = 0.0107068735;     // lambda [m]
  int num_subcarriers = 32;             // N
  int num_blocks = 7;                   // Q
  double subcarrier_spacing = 120.0e3;  // delta f [Hz]
  double symbol_duration = 8.92e-6;     // T_s [s]
  double useful_duration = 1.0 / 120.0e3;  // T_e [s]
  double cyclic_prefix = 8.92e-6 - 1.0 / 120.0e3;  // T_cp [s]
  double comm_noise_psd = 1.0e-23;      // eta0 [W/Hz]
  double radar_noise_psd = 1.1e-25;     // eta1 [W/Hz]
  double total_power = 1.0;             // P_T [W]
  double rcs = 0.1;                     // radar cross section [m^2]
  double ref_path_loss = 1.0e-7;        // alpha0 (linear, -70 dB)
  double ref_distance = 1.0;            // d0 [m]
  double path_loss_exponent = 2.55;     // xi
  double lightspeed = 299792458.0;      // c [m/s]

  /// Throws DomainError unless T_s = T_e + T_cp, delta_f = 1/T_e, all
  /// durations/powers/PSDs positive and N, Q >= 1.
  void validate() const;
};

/// Transmit/receive antenna position vectors with feasible-region metadata.
struct ArrayLayout {
  VectorXd tx_positions;  // p_tx, strictly increasing [m]
  VectorXd rx_positions;  // p_rx, strictly increasing [m]
  double tx_min = 0.0;    // D_min^tx
  double tx_max = 0.0;    // D_max^tx
  double rx_min = 0.0;    // D_min^rx
  double rx_max = 0.0;    // D_max^rx
  double min_spacing = 0.0;  // D_sp
  double tx_rx_gap = 0.0;    // D_tr

  int num_tx() const { return static_cast<int>(tx_positions.size()); }
  int num_rx() const { return static_cast<int>(rx_positions.size()); }

  void validate() const;

  /// Half-wavelength ULA anchored at the lower bound of each region.
  static ArrayLayout ula(int m_tx, int m_rx, double wavelength,
                         double tx_region, double rx_region);
};

/// One vehicle's motion triple (theta, d, nu).
struct VehicleState {
  double theta = 0.0;     // DoD [rad], (0, pi)
  double distance = 0.0;  // d [m], > 0
  double speed = 0.0;     // nu [m/s]
};

/// Echo parameters derived from a VehicleState under a SystemConfig.
struct EchoParams {
  double path_loss = 0.0;    // alpha
  double attenuation = 0.0;  // beta
  double gamma = 0.0;        // beta * T_e
  double doppler = 0.0;      // mu = 2 cos(theta) nu / lambda [Hz]
  double delay = 0.0;        // tau = 2 d / c [s]
  double cos_theta = 0.0;    // phi = cos(theta)
};

EchoParams derive_echo_params(const SystemConfig& cfg, const VehicleState& v);

/// Per-subcarrier unit-modulus beams, power allocation and user mapping.
struct BeamformerSet {
  std::vector<VectorXcd> beams;          // N vectors of length M_tx
  VectorXd powers;                       // p, length N [W]
  std::vector<std::vector<int>> groups;  // K disjoint sets covering 0..N-1

  int num_subcarriers() const { return static_cast<int>(beams.size()); }
  int num_users() const { return static_cast<int>(groups.size()); }
  /// Inverse of `groups`: subcarrier index -> user index.
  std::vector<int> owner_of_subcarrier() const;
  void validate(const SystemConfig& cfg) const;
};

/// Uniform contiguous partition of 0..n-1 into k consecutive groups.
std::vector<std::vector<int>> uniform_partition(int n, int k);

/// Stacked post-matched-filter echo, subcarrier-major:
/// index = n*(M_rx*Q) + q*M_rx + r. Noise covariance is
/// blockdiag(p_n eta1 T_e I) per subcarrier.
struct EchoMeasurement {
  VectorXcd samples;
  int m_rx = 0;
  int num_blocks = 0;
  int num_subcarriers = 0;
  VectorXd noise_var;  // per subcarrier: p_n eta1 T_e

  int index(int n, int q, int r) const {
    return n * (m_rx * num_blocks) + q * m_rx + r;
  }
};

}  // namespace maisac

#endif  // MAISAC_TYPES_HPP
