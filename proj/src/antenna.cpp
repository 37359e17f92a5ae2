// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/antenna.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "maisac/model.hpp"

namespace maisac {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct VehicleContext {
  EchoParams ep;
  GCoefficients coef;
  ZetaWeights zw;
  Eigen::Matrix3d prior;
  double cos_factor;  // 2 pi cos(theta) / lambda
};

VehicleContext make_context(const SystemConfig& cfg, const ArrayLayout& layout,
                            const VehicleState& v,
                            const Eigen::Matrix3d& prior) {
  VehicleContext c;
  c.ep = derive_echo_params(cfg, v);
  c.coef = g_coefficients(cfg, layout, c.ep.gamma);
  c.zw = zeta_weights(cfg, v);
  c.prior = prior;
  c.cos_factor = kTwoPi * c.ep.cos_theta / cfg.wavelength;
  return c;
}

Eigen::Matrix3d prior_of(const std::vector<Eigen::Matrix3d>& priors, int k) {
  return k < static_cast<int>(priors.size()) ? priors[k]
                                             : Eigen::Matrix3d::Zero();
}

// Information sums and their position gradients for one vehicle.
struct InfoSums {
  double i_theta = 0.0;  // includes prior
  double a = 0.0, b = 0.0, c = 0.0;
  VectorXd d_theta, d_a, d_b, d_c;
};

double schur_d(const InfoSums& s) { return s.a - s.b * s.b / s.c; }
double schur_v(const InfoSums& s) { return s.c - s.b * s.b / s.a; }

VectorXd schur_d_grad(const InfoSums& s) {
  return s.d_a - (2.0 * s.b / s.c) * s.d_b +
         (s.b * s.b / (s.c * s.c)) * s.d_c;
}
VectorXd schur_v_grad(const InfoSums& s) {
  return s.d_c - (2.0 * s.b / s.a) * s.d_b +
         (s.b * s.b / (s.a * s.a)) * s.d_a;
}
}  // namespace

TrigForms trig_forms(const VectorXd& positions, double theta, double wavelength,
                     const VectorXcd& w) {
  const int m = static_cast<int>(positions.size());
  TrigForms t;
  t.f.resize(m);
  t.s.resize(m);
  t.w_re.resize(m);
  t.w_im.resize(m);
  const double c = kTwoPi * std::cos(theta) / wavelength;
  for (int l = 0; l < m; ++l) {
    t.f[l] = std::cos(c * positions[l]);
    t.s[l] = std::sin(c * positions[l]);
    t.w_re[l] = w[l].real();
    t.w_im[l] = w[l].imag();
  }
  t.a_mat = t.f * t.f.transpose() + t.s * t.s.transpose();
  t.u_mat = t.f * t.s.transpose() - t.s * t.f.transpose();
  t.t_mat = t.w_re * t.w_re.transpose() + t.w_im * t.w_im.transpose();
  t.d_mat = t.w_re * t.w_im.transpose() - t.w_im * t.w_re.transpose();
  return t;
}

XiTerms xi_terms(const TrigForms& t, const VectorXd& lambda_tx) {
  XiTerms out;
  out.xi = t.f.dot(t.t_mat * t.f) + t.s.dot(t.t_mat * t.s) +
           2.0 * t.f.dot(t.d_mat * t.s);
  const VectorXd lf = lambda_tx.cwiseProduct(t.f);
  const VectorXd ls = lambda_tx.cwiseProduct(t.s);
  out.xi1 = lf.dot(t.t_mat * lf) + ls.dot(t.t_mat * ls) +
            2.0 * lf.dot(t.d_mat * ls);
  // xi2 = h^T L (A - jU) h + e^T L (A - jU) e + h^T L (U + jA) e
  //       - e^T L (U + jA) h, with h = w_re, e = w_im.
  const MatrixXd la = lambda_tx.asDiagonal() * t.a_mat;
  const MatrixXd lu = lambda_tx.asDiagonal() * t.u_mat;
  const double re = t.w_re.dot(la * t.w_re) + t.w_im.dot(la * t.w_im) +
                    t.w_re.dot(lu * t.w_im) - t.w_im.dot(lu * t.w_re);
  const double im = -t.w_re.dot(lu * t.w_re) - t.w_im.dot(lu * t.w_im) +
                    t.w_re.dot(la * t.w_im) - t.w_im.dot(la * t.w_re);
  out.xi2 = cplx(re, im);
  out.xi3 = std::conj(out.xi2);
  return out;
}

namespace {

// Per-(vehicle, beam) values and gradients of xi, xi1, Re(xi2) with respect
// to the transmit positions.
struct XiGradients {
  double xi = 0.0, xi1 = 0.0, re_xi2 = 0.0;
  VectorXd d_xi, d_xi1, d_re_xi2;
};

XiGradients xi_gradients(const VectorXd& pos, double cos_factor,
                         const VectorXcd& a, const VectorXcd& w) {
  const int m = static_cast<int>(pos.size());
  XiGradients g;
  VectorXd f(m), s(m), wre(m), wim(m);
  for (int l = 0; l < m; ++l) {
    f[l] = a[l].real();
    s[l] = a[l].imag();
    wre[l] = w[l].real();
    wim[l] = w[l].imag();
  }
  const MatrixXd t_mat = wre * wre.transpose() + wim * wim.transpose();
  const MatrixXd d_mat = wre * wim.transpose() - wim * wre.transpose();

  g.xi = f.dot(t_mat * f) + s.dot(t_mat * s) + 2.0 * f.dot(d_mat * s);
  const VectorXd lf = pos.cwiseProduct(f);
  const VectorXd ls = pos.cwiseProduct(s);
  g.xi1 = lf.dot(t_mat * lf) + ls.dot(t_mat * ls) + 2.0 * lf.dot(d_mat * ls);

  const VectorXd tf = t_mat * f + d_mat * s;
  const VectorXd ts = t_mat * s - d_mat * f;
  g.d_xi.resize(m);
  for (int l = 0; l < m; ++l)
    g.d_xi[l] = 2.0 * (-cos_factor * s[l]) * tf[l] +
                2.0 * (cos_factor * f[l]) * ts[l];

  const VectorXd tlf = t_mat * lf + d_mat * ls;
  const VectorXd tls = t_mat * ls - d_mat * lf;
  g.d_xi1.resize(m);
  for (int l = 0; l < m; ++l) {
    const double omega3 = f[l] - cos_factor * pos[l] * s[l];
    const double omega4 = s[l] + cos_factor * pos[l] * f[l];
    g.d_xi1[l] = 2.0 * omega3 * tlf[l] + 2.0 * omega4 * tls[l];
  }

  const cplx u = a.dot(w);  // a^H w
  cplx v(0.0, 0.0);         // a^H L w
  for (int l = 0; l < m; ++l) v += std::conj(a[l]) * pos[l] * w[l];
  g.re_xi2 = (std::conj(v) * u).real();
  g.d_re_xi2.resize(m);
  for (int l = 0; l < m; ++l) {
    const cplx dv = std::conj(a[l]) * w[l] * cplx(1.0, -cos_factor * pos[l]);
    const cplx du = cplx(0.0, -cos_factor) * std::conj(a[l]) * w[l];
    g.d_re_xi2[l] = (std::conj(dv) * u + std::conj(v) * du).real();
  }
  return g;
}

InfoSums info_sums_tx(const SystemConfig& cfg, const ArrayLayout& layout,
                      const BeamformerSet& beams, const VehicleContext& vc,
                      const VectorXcd& a, bool want_grad) {
  const int m = layout.num_tx();
  InfoSums s;
  s.d_theta = VectorXd::Zero(m);
  s.d_a = VectorXd::Zero(m);
  s.d_b = VectorXd::Zero(m);
  s.d_c = VectorXd::Zero(m);
  const auto& c = vc.coef;
  const auto& w = vc.zw;
  for (int n = 0; n < cfg.num_subcarriers; ++n) {
    const double pn = beams.powers[n];
    if (pn == 0.0) continue;
    const XiGradients x =
        xi_gradients(layout.tx_positions, vc.cos_factor, a, beams.beams[n]);
    const double g11 = c.c11 * (c.tr_rx2 * x.xi + c.m_rx * x.xi1 -
                                2.0 * c.tr_rx * x.re_xi2);
    const double g13 = c.c13 * (c.tr_rx * x.xi - c.m_rx * x.re_xi2);
    const double g33 = c.c33 * x.xi;
    const double g22 = c.c22 * static_cast<double>(n) * n * x.xi;
    const double g23 = -c.c23 * n * x.xi;
    s.i_theta += pn * (w.th_g11 * g11 + w.th_g13 * g13 + w.th_g33 * g33);
    s.a += pn * w.dd_g22 * g22;
    s.b += pn * w.dv_g23 * g23;
    s.c += pn * w.vv_g33 * g33;
    if (!want_grad) continue;
    const VectorXd dg11 = c.c11 * (c.tr_rx2 * x.d_xi + c.m_rx * x.d_xi1 -
                                   2.0 * c.tr_rx * x.d_re_xi2);
    const VectorXd dg13 = c.c13 * (c.tr_rx * x.d_xi - c.m_rx * x.d_re_xi2);
    s.d_theta +=
        pn * (w.th_g11 * dg11 + w.th_g13 * dg13 + (w.th_g33 * c.c33) * x.d_xi);
    s.d_a += pn * w.dd_g22 * c.c22 * static_cast<double>(n) * n * x.d_xi;
    s.d_b += pn * w.dv_g23 * (-c.c23) * n * x.d_xi;
    s.d_c += pn * w.vv_g33 * c.c33 * x.d_xi;
  }
  s.i_theta += vc.prior(0, 0);
  s.a += vc.prior(1, 1);
  s.b += vc.prior(1, 2);
  s.c += vc.prior(2, 2);
  return s;
}

}  // namespace

double tx_objective(const SystemConfig& cfg, const ArrayLayout& layout,
                    const BeamformerSet& beams,
                    const std::vector<VehicleState>& vehicles, double rho,
                    const Eigen::Vector3d& aleph,
                    const std::vector<Eigen::Matrix3d>& priors) {
  double obj = 0.0;
  if (rho > 0.0) obj += rho * sum_rate(cfg, layout, beams, vehicles);
  if (rho < 1.0) {
    for (int k = 0; k < static_cast<int>(vehicles.size()); ++k) {
      const VehicleContext vc =
          make_context(cfg, layout, vehicles[k], prior_of(priors, k));
      const VectorXcd a =
          steering(layout.tx_positions, vehicles[k].theta, cfg.wavelength);
      const InfoSums s = info_sums_tx(cfg, layout, beams, vc, a, false);
      if (!(s.a > 0.0 && s.c > 0.0 && s.a * s.c > s.b * s.b)) return -kInf;
      obj += (1.0 - rho) * (aleph[0] * s.i_theta + aleph[1] * schur_d(s) +
                            aleph[2] * schur_v(s));
    }
  }
  return obj;
}

VectorXd grad_tx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles, double rho,
                 const Eigen::Vector3d& aleph,
                 const std::vector<Eigen::Matrix3d>& priors) {
  const int m = layout.num_tx();
  VectorXd grad = VectorXd::Zero(m);
  const auto owner = beams.owner_of_subcarrier();
  for (int k = 0; k < static_cast<int>(vehicles.size()); ++k) {
    const VehicleContext vc =
        make_context(cfg, layout, vehicles[k], prior_of(priors, k));
    const VectorXcd a =
        steering(layout.tx_positions, vehicles[k].theta, cfg.wavelength);

    if (rho > 0.0) {
      const double alpha = vc.ep.path_loss;
      for (int n = 0; n < cfg.num_subcarriers; ++n) {
        if (owner[n] != k || beams.powers[n] == 0.0) continue;
        const XiGradients x = xi_gradients(layout.tx_positions, vc.cos_factor,
                                           a, beams.beams[n]);
        const double snr_coef =
            alpha * beams.powers[n] * cfg.useful_duration / cfg.comm_noise_psd;
        grad += rho * snr_coef / ((1.0 + snr_coef * x.xi) * kLn2) * x.d_xi;
      }
    }
    if (rho < 1.0) {
      const InfoSums s = info_sums_tx(cfg, layout, beams, vc, a, true);
      grad += (1.0 - rho) * (aleph[0] * s.d_theta + aleph[1] * schur_d_grad(s) +
                             aleph[2] * schur_v_grad(s));
    }
  }
  return grad;
}

double rx_objective(const SystemConfig& cfg, const ArrayLayout& layout,
                    const BeamformerSet& beams,
                    const std::vector<VehicleState>& vehicles,
                    const std::vector<Eigen::Matrix3d>& priors) {
  double obj = 0.0;
  for (int k = 0; k < static_cast<int>(vehicles.size()); ++k) {
    const FisherBlocks b = g_blocks(cfg, layout, beams, vehicles[k]);
    const ZetaWeights w = zeta_weights(cfg, vehicles[k]);
    const VectorXd tth = w.th_g11 * b.g11 + w.th_g13 * b.g13 + w.th_g33 * b.g33;
    obj += tth.dot(beams.powers) + prior_of(priors, k)(0, 0);
  }
  return obj;
}

VectorXd grad_rx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles) {
  const int m = layout.num_rx();
  VectorXd grad = VectorXd::Zero(m);
  for (int k = 0; k < static_cast<int>(vehicles.size()); ++k) {
    const EchoParams ep = derive_echo_params(cfg, vehicles[k]);
    const GCoefficients c = g_coefficients(cfg, layout, ep.gamma);
    const ZetaWeights w = zeta_weights(cfg, vehicles[k]);
    const VectorXcd a =
        steering(layout.tx_positions, vehicles[k].theta, cfg.wavelength);
    for (int n = 0; n < cfg.num_subcarriers; ++n) {
      const double pn = beams.powers[n];
      if (pn == 0.0) continue;
      const BeamQuadratics q =
          beam_quadratics(a, layout.tx_positions, beams.beams[n]);
      const double re_z = q.z_form.real();
      for (int ll = 0; ll < m; ++ll) {
        const double dg11 =
            c.c11 * (2.0 * layout.rx_positions[ll] * q.g_form - 2.0 * re_z);
        const double dg13 = c.c13 * q.g_form;
        grad[ll] += pn * (w.th_g11 * dg11 + w.th_g13 * dg13);
      }
    }
  }
  return grad;
}

VectorXd project_tx(const VectorXd& candidate, const ArrayLayout& layout,
                    bool literal_lower_anchor) {
  const int m = static_cast<int>(candidate.size());
  if (layout.tx_max - layout.tx_min < (m - 1) * layout.min_spacing - 1e-12)
    throw ConfigError("project_tx: region too small for the array");
  VectorXd out(m);
  double prev = (literal_lower_anchor ? layout.tx_max : layout.tx_min) -
                layout.min_spacing;
  for (int l = 0; l < m; ++l) {
    const double upper =
        layout.tx_max - (m - 1 - l) * layout.min_spacing;
    out[l] = std::max(prev + layout.min_spacing,
                      std::min(candidate[l], upper));
    prev = out[l];
  }
  return out;
}

VectorXd project_rx(const VectorXd& candidate, const ArrayLayout& layout) {
  const int m = static_cast<int>(candidate.size());
  if (layout.rx_max - layout.rx_min < (m - 1) * layout.min_spacing - 1e-12)
    throw ConfigError("project_rx: region too small for the array");
  VectorXd out(m);
  double next = layout.rx_max + layout.min_spacing;
  for (int ll = m - 1; ll >= 0; --ll) {
    const double lower = layout.rx_min + ll * layout.min_spacing;
    out[ll] = std::min(next - layout.min_spacing,
                       std::max(candidate[ll], lower));
    next = out[ll];
  }
  return out;
}

VectorXd project_ordered_euclidean(const VectorXd& candidate, double lower,
                                   double upper, double min_spacing) {
  const int m = static_cast<int>(candidate.size());
  if (upper - lower < (m - 1) * min_spacing - 1e-12)
    throw ConfigError("project_ordered_euclidean: region too small");
  // Shift out the spacing: y_l = p_l - l D_sp must be nondecreasing within
  // a common box, so the projection is PAVA followed by a clamp.
  VectorXd y(m);
  for (int l = 0; l < m; ++l) y[l] = candidate[l] - l * min_spacing;

  // Pool adjacent violators.
  std::vector<double> value(m), weight(m);
  std::vector<int> count(m);
  int blocks = 0;
  for (int l = 0; l < m; ++l) {
    value[blocks] = y[l];
    weight[blocks] = 1.0;
    count[blocks] = 1;
    ++blocks;
    while (blocks > 1 && value[blocks - 2] > value[blocks - 1]) {
      const double w = weight[blocks - 2] + weight[blocks - 1];
      value[blocks - 2] = (weight[blocks - 2] * value[blocks - 2] +
                           weight[blocks - 1] * value[blocks - 1]) /
                          w;
      weight[blocks - 2] = w;
      count[blocks - 2] += count[blocks - 1];
      --blocks;
    }
  }
  const double hi = upper - (m - 1) * min_spacing;
  VectorXd out(m);
  int idx = 0;
  for (int b = 0; b < blocks; ++b) {
    const double v = std::clamp(value[b], lower, hi);
    for (int r = 0; r < count[b]; ++r, ++idx) out[idx] = v + idx * min_spacing;
  }
  return out;
}

namespace {

PgaResult run_pga(const VectorXd& start, double wavelength,
                  const PgaConfig& pga,
                  const std::function<double(const VectorXd&)>& objective,
                  const std::function<VectorXd(const VectorXd&)>& gradient,
                  const std::function<VectorXd(const VectorXd&)>& project) {
  PgaResult res;
  res.positions = project(start);
  double obj = objective(res.positions);
  res.trace.push_back(obj);

  for (int it = 0; it < pga.max_iterations; ++it) {
    const VectorXd g = gradient(res.positions);
    const double gn = g.norm();
    if (gn == 0.0) break;
    const VectorXd dir = g / gn;

    double alpha = pga.step_scale * wavelength;
    bool accepted = false;
    VectorXd cand;
    double cand_obj = obj;
    while (alpha > 1e-14 * wavelength) {
      cand = project(res.positions + alpha * dir);
      cand_obj = objective(cand);
      const double predicted = g.dot(cand - res.positions);
      if (cand_obj > obj &&
          cand_obj - obj >= pga.armijo * std::max(predicted, 0.0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const double gain = cand_obj - obj;
    res.positions = cand;
    obj = cand_obj;
    res.trace.push_back(obj);
    if (gain <= pga.tolerance * (1.0 + std::abs(obj))) break;
  }
  return res;
}

}  // namespace

PgaResult pga_tx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles, double rho,
                 const Eigen::Vector3d& aleph,
                 const std::vector<Eigen::Matrix3d>& priors,
                 const PgaConfig& pga) {
  ArrayLayout work = layout;
  auto objective = [&](const VectorXd& p) {
    work.tx_positions = p;
    return tx_objective(cfg, work, beams, vehicles, rho, aleph, priors);
  };
  auto gradient = [&](const VectorXd& p) {
    work.tx_positions = p;
    return grad_tx(cfg, work, beams, vehicles, rho, aleph, priors);
  };
  auto project = [&](const VectorXd& p) {
    return pga.euclidean_projection
               ? project_ordered_euclidean(p, layout.tx_min, layout.tx_max,
                                           layout.min_spacing)
               : project_tx(p, layout, pga.literal_lower_anchor);
  };
  return run_pga(layout.tx_positions, cfg.wavelength, pga, objective, gradient,
                 project);
}

PgaResult pga_rx(const SystemConfig& cfg, const ArrayLayout& layout,
                 const BeamformerSet& beams,
                 const std::vector<VehicleState>& vehicles,
                 const std::vector<Eigen::Matrix3d>& priors,
                 const PgaConfig& pga) {
  ArrayLayout work = layout;
  auto objective = [&](const VectorXd& p) {
    work.rx_positions = p;
    return rx_objective(cfg, work, beams, vehicles, priors);
  };
  auto gradient = [&](const VectorXd& p) {
    work.rx_positions = p;
    return grad_rx(cfg, work, beams, vehicles);
  };
  auto project = [&](const VectorXd& p) {
    return pga.euclidean_projection
               ? project_ordered_euclidean(p, layout.rx_min, layout.rx_max,
                                           layout.min_spacing)
               : project_rx(p, layout);
  };
  return run_pga(layout.rx_positions, cfg.wavelength, pga, objective, gradient,
                 project);
}

}  // namespace maisac
