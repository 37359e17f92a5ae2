// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/beam_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "maisac/rng.hpp"

namespace maisac {

namespace {
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Real parametrization of a unit-diagonal Hermitian matrix: for each pair
// i < j, two coordinates (Re W_ij, Im W_ij).
struct PairBasis {
  int m = 0;
  std::vector<std::pair<int, int>> pairs;

  explicit PairBasis(int m_in) : m(m_in) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  }
  int dim() const { return 2 * static_cast<int>(pairs.size()); }

  MatrixXcd matrix(const Eigen::Ref<const VectorXd>& x) const {
    MatrixXcd w = MatrixXcd::Identity(m, m);
    for (size_t u = 0; u < pairs.size(); ++u) {
      const auto [i, j] = pairs[u];
      w(i, j) = cplx(x[2 * u], x[2 * u + 1]);
      w(j, i) = std::conj(w(i, j));
    }
    return w;
  }

  // Gradient of Re(u^H W v) with respect to the pair coordinates.
  void bilinear_grad(const VectorXcd& u, const VectorXcd& v,
                     VectorXd* grad) const {
    grad->resize(dim());
    for (size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      const cplx uv = std::conj(u[i]) * v[j];
      const cplx vu = std::conj(u[j]) * v[i];
      (*grad)[2 * p] = uv.real() + vu.real();
      (*grad)[2 * p + 1] = vu.imag() - uv.imag();
    }
  }

  // -log det W: gradient and Hessian from S = W^-1.
  void barrier_grad(const MatrixXcd& s, VectorXd* grad) const {
    grad->resize(dim());
    for (size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      (*grad)[2 * p] = -2.0 * s(i, j).real();
      (*grad)[2 * p + 1] = -2.0 * s(i, j).imag();
    }
  }

  void barrier_hess(const MatrixXcd& s, MatrixXd* hess) const {
    const int d = dim();
    hess->resize(d, d);
    auto basis = [&](int a, int* i, int* j, cplx* phase) {
      *i = pairs[a / 2].first;
      *j = pairs[a / 2].second;
      *phase = (a % 2 == 0) ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
    };
    for (int a = 0; a < d; ++a) {
      int ia, ja;
      cplx pa;
      basis(a, &ia, &ja, &pa);
      for (int b = a; b < d; ++b) {
        int ib, jb;
        cplx pb;
        basis(b, &ib, &jb, &pb);
        // X = S E_a S with E_a = pa e_i e_j^H + conj(pa) e_j e_i^H;
        // H_ab = Tr(X E_b) = pb X(jb, ib) + conj(pb) X(ib, jb).
        const cplx x_jb_ib = pa * s(jb, ia) * s(ja, ib) +
                             std::conj(pa) * s(jb, ja) * s(ia, ib);
        const cplx x_ib_jb = pa * s(ib, ia) * s(ja, jb) +
                             std::conj(pa) * s(ib, ja) * s(ia, jb);
        const double h = (pb * x_jb_ib + std::conj(pb) * x_ib_jb).real();
        (*hess)(a, b) = h;
        (*hess)(b, a) = h;
      }
    }
  }
};

struct AffineEntry {
  VectorXd xrow;  // dense over all block coordinates
  VectorXd yrow;
  double constant = 0.0;
};

struct Coupling {
  enum class Type { scalar, lmi2 };
  Type type;
  int first = 0;  // index into entries (1 for scalar, 3 for lmi2)
  std::string name;
};

class BeamSdpModel : public BarrierModel {
 public:
  enum class Mode { weighted, qos, qos_phase1 };

  BeamSdpModel(const BeamProblem& prob, Mode mode, double rho,
               const Eigen::Vector3d& aleph,
               const std::vector<BoundTriple>& thresholds)
      : prob_(prob), basis_(prob.layout.num_tx()), mode_(mode), rho_(rho) {
    n_sub_ = prob.cfg.num_subcarriers;
    n_veh_ = static_cast<int>(prob.vehicles.size());
    db_ = basis_.dim();
    nx_ = n_sub_ * db_;
    const bool sensing = mode_ != Mode::weighted || rho < 1.0;
    if (mode_ == Mode::weighted) {
      ny_ = sensing ? 3 * n_veh_ : 0;
    } else if (mode_ == Mode::qos_phase1) {
      ny_ = 1;
    } else {
      ny_ = 0;
    }

    if (sensing && prob.cfg.num_blocks < 2)
      throw DomainError("beam sdp: sensing terms need Q >= 2");

    owner_.assign(n_sub_, 0);
    for (int k = 0; k < static_cast<int>(prob.groups.size()); ++k)
      for (int n : prob.groups[k]) owner_[n] = k;

    build_functionals();
    if (sensing) build_couplings(aleph, thresholds);

    rate_coef_.assign(n_sub_, 0.0);
    if (mode_ != Mode::qos_phase1 && rho_ > 0.0) {
      for (int n = 0; n < n_sub_; ++n) {
        const int k = owner_[n];
        const double alpha =
            channel_gains(prob.cfg, prob.vehicles[k].distance).path_loss;
        rate_coef_[n] = alpha * prob.powers[n] * prob.cfg.useful_duration /
                        prob.cfg.comm_noise_psd;
      }
    }

    obj_y_ = VectorXd::Zero(ny_);
    if (mode_ == Mode::weighted && sensing) {
      for (int k = 0; k < n_veh_; ++k) {
        obj_y_[3 * k + 0] = (1.0 - rho_) * aleph[0];
        obj_y_[3 * k + 1] = (1.0 - rho_) * aleph[1];
        obj_y_[3 * k + 2] = (1.0 - rho_) * aleph[2];
      }
    } else if (mode_ == Mode::qos_phase1) {
      obj_y_[0] = -1.0;
    }

    // Constant Jacobian of all coupling entries.
    const int r = static_cast<int>(entries_.size());
    xrows_ = MatrixXd::Zero(nx_, r);
    yrows_ = MatrixXd::Zero(ny_, r);
    for (int e = 0; e < r; ++e) {
      xrows_.col(e) = entries_[e].xrow;
      if (ny_ > 0) yrows_.col(e) = entries_[e].yrow;
    }
  }

  int num_vars() const override { return nx_ + ny_; }

  double barrier_degree() const override {
    double deg = static_cast<double>(n_sub_) * basis_.m;
    for (const auto& c : couplings_)
      deg += (c.type == Coupling::Type::scalar) ? 1.0 : 2.0;
    return deg;
  }

  bool strictly_feasible(const VectorXd& z) const override {
    for (int n = 0; n < n_sub_; ++n) {
      const MatrixXcd w = basis_.matrix(z.segment(n * db_, db_));
      Eigen::LLT<MatrixXcd> llt(w);
      if (llt.info() != Eigen::Success) return false;
    }
    for (const auto& c : couplings_) {
      if (c.type == Coupling::Type::scalar) {
        if (!(entry_value(c.first, z) > 0.0)) return false;
      } else {
        const Eigen::Vector3d m = lmi_values(c, z);
        if (!(m[0] > 0.0 && m[0] * m[2] - m[1] * m[1] > 0.0)) return false;
      }
    }
    return true;
  }

  double objective(const VectorXd& z) const override {
    double obj = 0.0;
    if (mode_ != Mode::qos_phase1 && rho_ > 0.0) {
      const double w = (mode_ == Mode::weighted) ? rho_ : 1.0;
      for (int n = 0; n < n_sub_; ++n) {
        if (rate_coef_[n] <= 0.0) continue;
        const double g = g_value(owner_[n], n, z);
        obj += w * std::log2(1.0 + rate_coef_[n] * g);
      }
    }
    if (ny_ > 0) obj += obj_y_.dot(z.tail(ny_));
    return obj;
  }

  double value(const VectorXd& z, double t) const override {
    double v = -t * objective(z);
    for (int n = 0; n < n_sub_; ++n) {
      const MatrixXcd w = basis_.matrix(z.segment(n * db_, db_));
      Eigen::LLT<MatrixXcd> llt(w);
      if (llt.info() != Eigen::Success) return kInf;
      double ld = 0.0;
      for (int i = 0; i < basis_.m; ++i)
        ld += std::log(llt.matrixLLT()(i, i).real());
      v -= 2.0 * ld;
    }
    for (const auto& c : couplings_) {
      if (c.type == Coupling::Type::scalar) {
        const double m = entry_value(c.first, z);
        if (!(m > 0.0)) return kInf;
        v -= std::log(m);
      } else {
        double ld = 0.0;
        if (!logdet2_barrier(lmi_values(c, z), &ld, nullptr, nullptr))
          return kInf;
        v += ld;
      }
    }
    return v;
  }

  NewtonEval newton_eval(const VectorXd& z, double t) const override {
    NewtonEval ev;
    const int r = static_cast<int>(entries_.size());
    ev.grad = VectorXd::Zero(nx_ + ny_);

    // Per-block Hessians and gradients.
    std::vector<Eigen::LDLT<MatrixXd>> block_fact(n_sub_);
    for (int n = 0; n < n_sub_; ++n) {
      const auto seg = z.segment(n * db_, db_);
      const MatrixXcd w = basis_.matrix(seg);
      Eigen::LLT<MatrixXcd> llt(w);
      const MatrixXcd s =
          llt.solve(MatrixXcd::Identity(basis_.m, basis_.m));
      VectorXd bgrad;
      basis_.barrier_grad(s, &bgrad);
      MatrixXd bhess;
      basis_.barrier_hess(s, &bhess);
      if (rate_coef_[n] > 0.0) {
        const int k = owner_[n];
        const double w_obj = (mode_ == Mode::weighted) ? rho_ : 1.0;
        const double g = fg_[k][n].constant + fg_[k][n].grad.dot(seg);
        const double den = 1.0 + rate_coef_[n] * g;
        const double c1 = t * w_obj * rate_coef_[n] / (den * kLn2);
        bgrad -= c1 * fg_[k][n].grad;
        bhess += (c1 * rate_coef_[n] / den) *
                 (fg_[k][n].grad * fg_[k][n].grad.transpose());
      }
      ev.grad.segment(n * db_, db_) += bgrad;
      block_fact[n].compute(bhess);
    }

    // Coupling barrier: gradient and the r-dimensional curvature factor.
    VectorXd gphi = VectorXd::Zero(r);
    MatrixXd lc = MatrixXd::Zero(r, r);
    for (const auto& c : couplings_) {
      if (c.type == Coupling::Type::scalar) {
        const double m = entry_value(c.first, z);
        gphi[c.first] = -1.0 / m;
        lc(c.first, c.first) = 1.0 / m;
      } else {
        Eigen::Vector3d gb;
        Eigen::Matrix3d hb;
        logdet2_barrier(lmi_values(c, z), nullptr, &gb, &hb);
        gphi.segment<3>(c.first) = gb;
        Eigen::LLT<Eigen::Matrix3d> llt3(hb);
        lc.block<3, 3>(c.first, c.first) = llt3.matrixL();
      }
    }
    if (r > 0) {
      ev.grad.head(nx_) += xrows_ * gphi;
      if (ny_ > 0) ev.grad.tail(ny_) += yrows_ * gphi;
    }
    if (ny_ > 0) ev.grad.tail(ny_) -= t * obj_y_;

    // Newton direction via block elimination plus the low-rank coupling.
    const VectorXd gx = ev.grad.head(nx_);
    VectorXd dinv_gx(nx_);
    MatrixXd ux, p_cols;
    if (r > 0) ux = xrows_ * lc;  // n_x by r
    for (int n = 0; n < n_sub_; ++n)
      dinv_gx.segment(n * db_, db_) =
          block_fact[n].solve(gx.segment(n * db_, db_));
    if (r > 0) {
      p_cols.resize(nx_, r);
      for (int n = 0; n < n_sub_; ++n)
        p_cols.middleRows(n * db_, db_) =
            block_fact[n].solve(ux.middleRows(n * db_, db_));
    }

    VectorXd dx, dy;
    if (r == 0) {
      dx = -dinv_gx;
      dy = VectorXd::Zero(0);
    } else {
      const MatrixXd s_r = ux.transpose() * p_cols;
      const MatrixXd m1 = MatrixXd::Identity(r, r) + s_r;
      Eigen::LDLT<MatrixXd> m1f(m1);
      const VectorXd q = ux.transpose() * dinv_gx;
      VectorXd w_vec;
      if (ny_ > 0) {
        const MatrixXd vy = yrows_ * lc;  // n_y by r
        const MatrixXd m1inv_vyt = m1f.solve(vy.transpose());
        const MatrixXd ys = vy * m1inv_vyt;  // n_y x n_y
        const VectorXd gy = ev.grad.tail(ny_);
        const VectorXd rhs = -gy + vy * m1f.solve(q);
        Eigen::LDLT<MatrixXd> ysf(ys);
        dy = ysf.solve(rhs);
        w_vec = m1f.solve(-q + vy.transpose() * dy);
      } else {
        dy = VectorXd::Zero(0);
        w_vec = m1f.solve(-q);
      }
      dx = -dinv_gx;
      const VectorXd uxw = ux * w_vec;
      for (int n = 0; n < n_sub_; ++n)
        dx.segment(n * db_, db_) -=
            block_fact[n].solve(uxw.segment(n * db_, db_));
    }

    ev.step.resize(nx_ + ny_);
    ev.step.head(nx_) = dx;
    if (ny_ > 0) ev.step.tail(ny_) = dy;
    ev.value = value(z, t);
    ev.decrement2 = -ev.grad.dot(ev.step);
    if (!(ev.decrement2 >= 0.0)) ev.decrement2 = 0.0;
    return ev;
  }

  // -- construction helpers and accessors ----------------------------------

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int db() const { return db_; }
  const PairBasis& basis() const { return basis_; }

  double g_value(int k, int n, const VectorXd& z) const {
    return fg_[k][n].constant + fg_[k][n].grad.dot(z.segment(n * db_, db_));
  }

  double entry_value(int e, const VectorXd& z) const {
    double v = entries_[e].constant + entries_[e].xrow.dot(z.head(nx_));
    if (ny_ > 0) v += entries_[e].yrow.dot(z.tail(ny_));
    return v;
  }

  Eigen::Vector3d lmi_values(const Coupling& c, const VectorXd& z) const {
    return Eigen::Vector3d(entry_value(c.first, z), entry_value(c.first + 1, z),
                           entry_value(c.first + 2, z));
  }

  /// Scaled sensing margins at z, paired with constraint names. For LMIs the
  /// margin is min(diagonal head, determinant).
  std::pair<double, std::string> min_margin(const VectorXd& z) const {
    double best = kInf;
    std::string name = "none";
    for (const auto& c : couplings_) {
      double m;
      if (c.type == Coupling::Type::scalar) {
        m = entry_value(c.first, z);
      } else {
        const Eigen::Vector3d v = lmi_values(c, z);
        m = std::min(v[0], v[0] * v[2] - v[1] * v[1]);
      }
      if (m < best) {
        best = m;
        name = c.name;
      }
    }
    return {best, name};
  }

  /// Feasible start for the weighted mode: W = I with auxiliaries placed
  /// strictly inside their information margins.
  VectorXd weighted_start() const {
    VectorXd z = VectorXd::Zero(nx_ + ny_);
    for (int k = 0; k < n_veh_ && ny_ > 0; ++k) {
      const double itheta = info_theta0_[k];
      const double a0 = info_a0_[k];
      const double b0 = info_b0_[k];
      const double c0 = info_c0_[k];
      z[nx_ + 3 * k + 0] = itheta - std::max(0.5 * std::abs(itheta), theta_scale_[k]);
      const double dinfo = (c0 > 0.0) ? a0 - b0 * b0 / c0 : 0.0;
      const double vinfo = (a0 > 0.0) ? c0 - b0 * b0 / a0 : 0.0;
      z[nx_ + 3 * k + 1] = dinfo - std::max(0.5 * std::abs(dinfo), 0.5 / dscale1_[k]);
      z[nx_ + 3 * k + 2] = vinfo - std::max(0.5 * std::abs(vinfo), 0.5 / vscale1_[k]);
    }
    return z;
  }

 private:
  struct Functional {
    VectorXd grad;  // block-local (d_b)
    double constant = 0.0;
  };

  void build_functionals() {
    fg_.resize(n_veh_);
    fk_.resize(n_veh_);
    fz_.resize(n_veh_);
    a_tx_.resize(n_veh_);
    coef_.resize(n_veh_);
    zw_.resize(n_veh_);
    const VectorXd& pos = prob_.layout.tx_positions;
    for (int k = 0; k < n_veh_; ++k) {
      const EchoParams ep = derive_echo_params(prob_.cfg, prob_.vehicles[k]);
      coef_[k] = g_coefficients(prob_.cfg, prob_.layout, ep.gamma);
      zw_[k] = zeta_weights(prob_.cfg, prob_.vehicles[k]);
      a_tx_[k] = steering(pos, prob_.vehicles[k].theta, prob_.cfg.wavelength);
      VectorXcd la(pos.size());
      for (int l = 0; l < pos.size(); ++l) la[l] = pos[l] * a_tx_[k][l];
      Functional g, kq, zf;
      basis_.bilinear_grad(a_tx_[k], a_tx_[k], &g.grad);
      g.constant = static_cast<double>(basis_.m);
      basis_.bilinear_grad(la, la, &kq.grad);
      kq.constant = pos.squaredNorm();
      basis_.bilinear_grad(la, a_tx_[k], &zf.grad);
      zf.constant = pos.sum();
      // All subcarriers share the same steering, so the per-n functionals
      // coincide; stored per n for clarity of indexing.
      fg_[k].assign(n_sub_, g);
      fk_[k].assign(n_sub_, kq);
      fz_[k].assign(n_sub_, zf);
    }
  }

  // Dense x-row of sum_n p_n (wg * g_n + wk * k_n + wz * z_n) for vehicle k.
  AffineEntry info_row(int k, const VectorXd& wg, const VectorXd& wk,
                       const VectorXd& wz) const {
    AffineEntry e;
    e.xrow = VectorXd::Zero(nx_);
    e.yrow = VectorXd::Zero(ny_);
    for (int n = 0; n < n_sub_; ++n) {
      const double pn = prob_.powers[n];
      if (pn == 0.0) continue;
      e.xrow.segment(n * db_, db_) += pn * (wg[n] * fg_[k][n].grad +
                                            wk[n] * fk_[k][n].grad +
                                            wz[n] * fz_[k][n].grad);
      e.constant += pn * (wg[n] * fg_[k][n].constant +
                          wk[n] * fk_[k][n].constant +
                          wz[n] * fz_[k][n].constant);
    }
    return e;
  }

  void build_couplings(const Eigen::Vector3d& /*aleph*/,
                       const std::vector<BoundTriple>& thresholds) {
    info_theta0_.resize(n_veh_);
    info_a0_.resize(n_veh_);
    info_b0_.resize(n_veh_);
    info_c0_.resize(n_veh_);
    theta_scale_.resize(n_veh_);
    dscale1_.resize(n_veh_);
    dscale2_.resize(n_veh_);
    vscale1_.resize(n_veh_);
    vscale2_.resize(n_veh_);

    for (int k = 0; k < n_veh_; ++k) {
      const GCoefficients& c = coef_[k];
      const ZetaWeights& w = zw_[k];
      const Eigen::Matrix3d prior = (k < static_cast<int>(prob_.priors.size()))
                                        ? prob_.priors[k]
                                        : Eigen::Matrix3d::Zero();

      VectorXd n_lin(n_sub_), n_sq(n_sub_), ones(n_sub_);
      for (int n = 0; n < n_sub_; ++n) {
        n_lin[n] = n;
        n_sq[n] = static_cast<double>(n) * n;
        ones[n] = 1.0;
      }

      // theta information: w11 g11 + w13 g13 + w33 g33 expanded into the
      // three transmit quadratic forms.
      VectorXd wg = (w.th_g11 * c.c11 * c.tr_rx2 + w.th_g13 * c.c13 * c.tr_rx +
                     w.th_g33 * c.c33) *
                    ones;
      VectorXd wk = (w.th_g11 * c.c11 * c.m_rx) * ones;
      VectorXd wz =
          (-2.0 * w.th_g11 * c.c11 * c.tr_rx - w.th_g13 * c.c13 * c.m_rx) * ones;
      AffineEntry itheta = info_row(k, wg, wk, wz);

      AffineEntry a_ent =
          info_row(k, (w.dd_g22 * c.c22) * n_sq, 0.0 * ones, 0.0 * ones);
      AffineEntry b_ent =
          info_row(k, (-w.dv_g23 * c.c23) * n_lin, 0.0 * ones, 0.0 * ones);
      AffineEntry c_ent =
          info_row(k, (w.vv_g33 * c.c33) * ones, 0.0 * ones, 0.0 * ones);

      info_theta0_[k] = itheta.constant + prior(0, 0);
      info_a0_[k] = a_ent.constant + prior(1, 1);
      info_b0_[k] = b_ent.constant + prior(1, 2);
      info_c0_[k] = c_ent.constant + prior(2, 2);

      const bool qos = mode_ != Mode::weighted;
      const double inv_t = qos ? 1.0 / thresholds[k].theta : 0.0;
      const double inv_d = qos ? 1.0 / thresholds[k].distance : 0.0;
      const double inv_v = qos ? 1.0 / thresholds[k].speed : 0.0;

      theta_scale_[k] =
          std::max(std::abs(info_theta0_[k]) + inv_t, 1e-300);
      const double sa = std::abs(info_a0_[k]) + inv_d + 1e-300;
      const double sc = std::abs(info_c0_[k]) + 1e-300;
      dscale1_[k] = 1.0 / std::sqrt(sa);
      dscale2_[k] = 1.0 / std::sqrt(sc);
      const double va = std::abs(info_c0_[k]) + inv_v + 1e-300;
      const double vb = std::abs(info_a0_[k]) + 1e-300;
      vscale1_[k] = 1.0 / std::sqrt(va);
      vscale2_[k] = 1.0 / std::sqrt(vb);

      const std::string tag = "[" + std::to_string(k) + "]";

      // theta scalar constraint.
      {
        AffineEntry e = itheta;
        e.constant += prior(0, 0) - inv_t;
        if (mode_ == Mode::weighted)
          e.yrow[3 * k + 0] = -1.0;
        else if (mode_ == Mode::qos_phase1)
          e.yrow[0] = theta_scale_[k];
        e.xrow /= theta_scale_[k];
        e.yrow /= theta_scale_[k];
        e.constant /= theta_scale_[k];
        couplings_.push_back({Coupling::Type::scalar,
                              static_cast<int>(entries_.size()),
                              "theta_lpcrlb" + tag});
        entries_.push_back(std::move(e));
      }

      // distance LMI: [[A + J22 - rhs, B + J23], [., C + J33]].
      {
        const double s1 = dscale1_[k];
        const double s2 = dscale2_[k];
        couplings_.push_back({Coupling::Type::lmi2,
                              static_cast<int>(entries_.size()),
                              "distance_lpcrlb" + tag});
        AffineEntry m1 = a_ent;
        m1.constant += prior(1, 1) - inv_d;
        if (mode_ == Mode::weighted)
          m1.yrow[3 * k + 1] = -1.0;
        else if (mode_ == Mode::qos_phase1)
          m1.yrow[0] = 1.0 / (s1 * s1);
        scale_entry(&m1, s1 * s1);
        AffineEntry m2 = b_ent;
        m2.constant += prior(1, 2);
        scale_entry(&m2, s1 * s2);
        AffineEntry m3 = c_ent;
        m3.constant += prior(2, 2);
        if (mode_ == Mode::qos_phase1) m3.yrow[0] = 1.0 / (s2 * s2);
        scale_entry(&m3, s2 * s2);
        entries_.push_back(std::move(m1));
        entries_.push_back(std::move(m2));
        entries_.push_back(std::move(m3));
      }

      // velocity LMI: [[C + J33 - rhs, B + J23], [., A + J22]].
      {
        const double s1 = vscale1_[k];
        const double s2 = vscale2_[k];
        couplings_.push_back({Coupling::Type::lmi2,
                              static_cast<int>(entries_.size()),
                              "velocity_lpcrlb" + tag});
        AffineEntry m1 = c_ent;
        m1.constant += prior(2, 2) - inv_v;
        if (mode_ == Mode::weighted)
          m1.yrow[3 * k + 2] = -1.0;
        else if (mode_ == Mode::qos_phase1)
          m1.yrow[0] = 1.0 / (s1 * s1);
        scale_entry(&m1, s1 * s1);
        AffineEntry m2 = b_ent;
        m2.constant += prior(1, 2);
        scale_entry(&m2, s1 * s2);
        AffineEntry m3 = a_ent;
        m3.constant += prior(1, 1);
        if (mode_ == Mode::qos_phase1) m3.yrow[0] = 1.0 / (s2 * s2);
        scale_entry(&m3, s2 * s2);
        entries_.push_back(std::move(m1));
        entries_.push_back(std::move(m2));
        entries_.push_back(std::move(m3));
      }
    }
  }

  static void scale_entry(AffineEntry* e, double s) {
    e->xrow *= s;
    e->yrow *= s;
    e->constant *= s;
  }

  const BeamProblem& prob_;
  PairBasis basis_;
  Mode mode_;
  double rho_;
  int n_sub_ = 0, n_veh_ = 0, db_ = 0, nx_ = 0, ny_ = 0;
  std::vector<int> owner_;
  std::vector<double> rate_coef_;
  VectorXd obj_y_;
  std::vector<std::vector<Functional>> fg_, fk_, fz_;
  std::vector<VectorXcd> a_tx_;
  std::vector<GCoefficients> coef_;
  std::vector<ZetaWeights> zw_;
  std::vector<AffineEntry> entries_;
  std::vector<Coupling> couplings_;
  MatrixXd xrows_, yrows_;
  std::vector<double> info_theta0_, info_a0_, info_b0_, info_c0_;
  std::vector<double> theta_scale_, dscale1_, dscale2_, vscale1_, vscale2_;
};

SdpSolution run_barrier(const BeamSdpModel& model, VectorXd z0,
                        const SdpConfig& cfg, const BeamProblem& prob) {
  BarrierOptions opts;
  opts.rel_gap_tol = cfg.contract.tolerance;
  opts.max_total_newton = cfg.contract.max_iterations;
  opts.t0 = 1.0;

  SdpSolution sol;
  double prev = model.objective(z0);
  sol.trace.push_back(prev);
  sol.surrogate_trace.push_back(prev);

  // The lifted objective is concave, so each SCA pass solves the same
  // convex program; the loop is kept to certify the stationary trace.
  VectorXd z = std::move(z0);
  for (int it = 0; it < cfg.max_sca_iterations; ++it) {
    const BarrierResult br = barrier_maximize(model, z, opts);
    z = br.z;
    sol.status = br.status;
    sol.gap = br.gap;
    sol.newton_steps += br.newton_steps;
    sol.trace.push_back(br.objective);
    sol.surrogate_trace.push_back(br.objective);
    const double change = std::abs(br.objective - prev);
    prev = br.objective;
    opts.t0 = std::max(1.0, br.t_final);  // warm restart of the path
    if (change <= cfg.sca_rel_tol * (1.0 + std::abs(br.objective))) break;
  }

  sol.objective = prev;
  const int m = prob.layout.num_tx();
  PairBasis basis(m);
  sol.w_mats.resize(prob.cfg.num_subcarriers);
  for (int n = 0; n < prob.cfg.num_subcarriers; ++n)
    sol.w_mats[n] = basis.matrix(z.segment(n * basis.dim(), basis.dim()));
  if (model.ny() >= 3) {
    const int n_veh = static_cast<int>(prob.vehicles.size());
    sol.kappa.resize(n_veh);
    sol.eps_d.resize(n_veh);
    sol.eps_v.resize(n_veh);
    for (int k = 0; k < n_veh; ++k) {
      sol.kappa[k] = z[model.nx() + 3 * k + 0];
      sol.eps_d[k] = z[model.nx() + 3 * k + 1];
      sol.eps_v[k] = z[model.nx() + 3 * k + 2];
    }
  }
  return sol;
}

}  // namespace

SdpSolution sca_solve_weighted(const BeamProblem& prob, double rho,
                               const Eigen::Vector3d& aleph,
                               const SdpConfig& cfg) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw DomainError("sca_solve_weighted: rho must lie in [0, 1]");
  BeamSdpModel model(prob, BeamSdpModel::Mode::weighted, rho, aleph, {});
  return run_barrier(model, model.weighted_start(), cfg, prob);
}

SdpSolution sca_solve_qos(const BeamProblem& prob,
                          const std::vector<BoundTriple>& thresholds,
                          const SdpConfig& cfg) {
  for (const auto& t : thresholds)
    if (!(t.theta > 0.0 && t.distance > 0.0 && t.speed > 0.0))
      throw DomainError("sca_solve_qos: thresholds must be positive");

  BeamSdpModel model(prob, BeamSdpModel::Mode::qos, 1.0,
                     Eigen::Vector3d::Zero(), thresholds);
  VectorXd z0 = VectorXd::Zero(model.num_vars());
  if (!model.strictly_feasible(z0)) {
    BeamSdpModel phase1(prob, BeamSdpModel::Mode::qos_phase1, 1.0,
                        Eigen::Vector3d::Zero(), thresholds);
    VectorXd zp = VectorXd::Zero(phase1.num_vars());
    bool started = false;
    for (double s0 = 1.0; s0 < 1e12; s0 *= 4.0) {
      zp[phase1.num_vars() - 1] = s0;
      if (phase1.strictly_feasible(zp)) {
        started = true;
        break;
      }
    }
    if (!started)
      throw InfeasibleError("sca_solve_qos: no slack makes the start feasible",
                            phase1.min_margin(zp).second);
    BarrierOptions opts;
    opts.rel_gap_tol = 1e-6;
    opts.max_total_newton = cfg.contract.max_iterations;
    const int s_index = phase1.num_vars() - 1;
    opts.early_stop = [s_index](const VectorXd& zz) {
      return zz[s_index] < -1e-2;
    };
    const BarrierResult pr = barrier_maximize(phase1, zp, opts);
    if (pr.z[s_index] >= 0.0) {
      VectorXd x_only = pr.z.head(model.num_vars());
      throw InfeasibleError("sca_solve_qos: thresholds infeasible",
                            model.min_margin(x_only).second);
    }
    z0 = pr.z.head(model.num_vars());
  }
  return run_barrier(model, z0, cfg, prob);
}

VectorXcd gaussian_randomize(
    const MatrixXcd& w_mat, int samples, std::uint64_t seed,
    const std::function<double(const VectorXcd&)>& objective,
    const std::function<bool(const VectorXcd&)>& feasible) {
  const int m = static_cast<int>(w_mat.rows());
  auto project = [m](const VectorXcd& x) {
    VectorXcd w(m);
    for (int l = 0; l < m; ++l) {
      const double mag = std::abs(x[l]);
      w[l] = mag > 0.0 ? x[l] / mag : cplx(1.0, 0.0);
    }
    // Global phase normalization: first entry real positive.
    const cplx ref = std::conj(w[0]);
    for (int l = 0; l < m; ++l) w[l] *= ref;
    return w;
  };

  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(w_mat);
  MatrixXcd factor = es.eigenvectors();
  for (int i = 0; i < m; ++i)
    factor.col(i) *= std::sqrt(std::max(0.0, es.eigenvalues()[i]));

  // Candidate 0: phase projection of the principal eigenvector; then draws.
  std::vector<VectorXcd> candidates;
  candidates.push_back(project(es.eigenvectors().col(m - 1)));
  Rng rng = Rng(seed).fork(0x72616e64ull);
  for (int s = 0; s < samples; ++s) {
    VectorXcd u(m);
    for (int l = 0; l < m; ++l)
      u[l] = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
    candidates.push_back(project(factor * u));
  }

  int best = -1;
  double best_score = -kInf;
  int fallback = -1;
  double fallback_score = -kInf;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    const double score = objective(candidates[i]);
    if (score > fallback_score) {
      fallback_score = score;
      fallback = i;
    }
    if (feasible && !feasible(candidates[i])) continue;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  // Nothing feasible: least-bad candidate; outer loops re-tighten.
  return candidates[best >= 0 ? best : std::max(fallback, 0)];
}

BeamObjective::BeamObjective(const BeamProblem& prob) : prob_(prob) {
  const int n_veh = static_cast<int>(prob_.vehicles.size());
  owner_.assign(prob_.cfg.num_subcarriers, 0);
  for (int k = 0; k < static_cast<int>(prob_.groups.size()); ++k)
    for (int n : prob_.groups[k]) owner_[n] = k;
  for (int k = 0; k < n_veh; ++k) {
    const EchoParams ep = derive_echo_params(prob_.cfg, prob_.vehicles[k]);
    coef_.push_back(g_coefficients(prob_.cfg, prob_.layout, ep.gamma));
    weights_.push_back(zeta_weights(prob_.cfg, prob_.vehicles[k]));
    a_tx_.push_back(
        steering(prob_.layout.tx_positions, prob_.vehicles[k].theta,
                 prob_.cfg.wavelength));
  }
  rate_coef_.assign(prob_.cfg.num_subcarriers, 0.0);
  for (int n = 0; n < prob_.cfg.num_subcarriers; ++n) {
    const int k = owner_[n];
    const double alpha =
        channel_gains(prob_.cfg, prob_.vehicles[k].distance).path_loss;
    rate_coef_[n] = alpha * prob_.powers[n] * prob_.cfg.useful_duration /
                    prob_.cfg.comm_noise_psd;
  }
}

double BeamObjective::rate(const std::vector<VectorXcd>& beams) const {
  double out = 0.0;
  for (int n = 0; n < prob_.cfg.num_subcarriers; ++n) {
    if (rate_coef_[n] <= 0.0) continue;
    const double g = std::norm(a_tx_[owner_[n]].dot(beams[n]));
    out += std::log2(1.0 + rate_coef_[n] * g);
  }
  return out;
}

BoundTriple BeamObjective::bounds(const std::vector<VectorXcd>& beams,
                                  int vehicle) const {
  std::vector<BeamQuadratics> forms(prob_.cfg.num_subcarriers);
  for (int n = 0; n < prob_.cfg.num_subcarriers; ++n)
    forms[n] = beam_quadratics(a_tx_[vehicle], prob_.layout.tx_positions,
                               beams[n]);
  const FisherBlocks blocks = fisher_blocks_from_forms(coef_[vehicle], forms);
  const ZetaFim zf = fim_zeta_block(prob_.cfg, blocks, prob_.vehicles[vehicle],
                                    prob_.powers);
  const Eigen::Matrix3d prior =
      (vehicle < static_cast<int>(prob_.priors.size()))
          ? prob_.priors[vehicle]
          : Eigen::Matrix3d::Zero();
  return lpcrlb(zf, prior);
}

double BeamObjective::sensing_score(const std::vector<VectorXcd>& beams,
                                    const Eigen::Vector3d& aleph) const {
  double out = 0.0;
  for (int k = 0; k < static_cast<int>(prob_.vehicles.size()); ++k) {
    BoundTriple b;
    try {
      b = bounds(beams, k);
    } catch (const InfeasibleError&) {
      return -kInf;
    }
    out += aleph[0] / b.theta + aleph[1] / b.distance + aleph[2] / b.speed;
  }
  return out;
}

double BeamObjective::weighted(const std::vector<VectorXcd>& beams, double rho,
                               const Eigen::Vector3d& aleph) const {
  const double r = rho * rate(beams);
  if (rho >= 1.0) return r;
  const double s = sensing_score(beams, aleph);
  return r + (1.0 - rho) * s;
}

bool BeamObjective::meets(const std::vector<VectorXcd>& beams,
                          const std::vector<BoundTriple>& thresholds,
                          double slack) const {
  for (int k = 0; k < static_cast<int>(prob_.vehicles.size()); ++k) {
    BoundTriple b;
    try {
      b = bounds(beams, k);
    } catch (const InfeasibleError&) {
      return false;
    }
    const double tol = 1.0 + slack;
    if (b.theta > thresholds[k].theta * tol ||
        b.distance > thresholds[k].distance * tol ||
        b.speed > thresholds[k].speed * tol)
      return false;
  }
  return true;
}

namespace {

std::vector<VectorXcd> initial_projection(const SdpSolution& sol) {
  std::vector<VectorXcd> beams;
  beams.reserve(sol.w_mats.size());
  for (const auto& w : sol.w_mats) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(w);
    VectorXcd v = es.eigenvectors().col(w.rows() - 1);
    for (int l = 0; l < v.size(); ++l) {
      const double mag = std::abs(v[l]);
      v[l] = mag > 0.0 ? v[l] / mag : cplx(1.0, 0.0);
    }
    const cplx ref = std::conj(v[0]);
    for (int l = 0; l < v.size(); ++l) v[l] *= ref;
    beams.push_back(v);
  }
  return beams;
}

}  // namespace

RecoveredBeams weighted_beamforming(const BeamProblem& prob, double rho,
                                    const Eigen::Vector3d& aleph,
                                    const SdpConfig& cfg) {
  RecoveredBeams out;
  out.relaxation = sca_solve_weighted(prob, rho, aleph, cfg);
  out.relaxed_objective = out.relaxation.objective;

  const BeamObjective ctx(prob);
  std::vector<VectorXcd> beams = initial_projection(out.relaxation);
  for (int n = 0; n < prob.cfg.num_subcarriers; ++n) {
    auto score = [&](const VectorXcd& w) {
      std::vector<VectorXcd> trial = beams;
      trial[n] = w;
      return ctx.weighted(trial, rho, aleph);
    };
    const VectorXcd cand =
        gaussian_randomize(out.relaxation.w_mats[n], cfg.randomize_samples,
                           cfg.seed + 7919 * n, score);
    if (score(cand) >= score(beams[n])) beams[n] = cand;
  }
  out.beams = std::move(beams);
  out.objective = ctx.weighted(out.beams, rho, aleph);
  out.achieved.resize(prob.vehicles.size());
  for (int k = 0; k < static_cast<int>(prob.vehicles.size()); ++k) {
    try {
      out.achieved[k] = ctx.bounds(out.beams, k);
    } catch (const InfeasibleError&) {
      out.achieved[k] = BoundTriple{kInf, kInf, kInf};
    }
  }
  return out;
}

RecoveredBeams qos_beamforming(const BeamProblem& prob,
                               const std::vector<BoundTriple>& thresholds,
                               const SdpConfig& cfg, double slack,
                               int max_rounds) {
  const BeamObjective ctx(prob);
  std::vector<BoundTriple> current = thresholds;
  RecoveredBeams best;
  bool have_best = false;

  for (int round = 0; round < max_rounds; ++round) {
    RecoveredBeams attempt;
    try {
      attempt.relaxation = sca_solve_qos(prob, current, cfg);
    } catch (const InfeasibleError&) {
      // Re-tightened thresholds can overshoot; keep the best prior round.
      if (have_best) break;
      throw;
    }
    attempt.relaxed_objective = attempt.relaxation.objective;

    std::vector<VectorXcd> beams = initial_projection(attempt.relaxation);
    for (int n = 0; n < prob.cfg.num_subcarriers; ++n) {
      auto score = [&](const VectorXcd& w) {
        std::vector<VectorXcd> trial = beams;
        trial[n] = w;
        return ctx.rate(trial);
      };
      auto ok = [&](const VectorXcd& w) {
        std::vector<VectorXcd> trial = beams;
        trial[n] = w;
        return ctx.meets(trial, current, 0.0);
      };
      const VectorXcd cand =
          gaussian_randomize(attempt.relaxation.w_mats[n],
                             cfg.randomize_samples, cfg.seed + 7919 * n, score,
                             ok);
      const bool cand_ok = ok(cand);
      const bool cur_ok = ok(beams[n]);
      if ((cand_ok && !cur_ok) ||
          (cand_ok == cur_ok && score(cand) >= score(beams[n])))
        beams[n] = cand;
    }
    attempt.beams = std::move(beams);
    attempt.objective = ctx.rate(attempt.beams);
    attempt.achieved.resize(prob.vehicles.size());
    bool within = true;
    for (int k = 0; k < static_cast<int>(prob.vehicles.size()); ++k) {
      try {
        attempt.achieved[k] = ctx.bounds(attempt.beams, k);
      } catch (const InfeasibleError&) {
        attempt.achieved[k] = BoundTriple{kInf, kInf, kInf};
      }
      const auto& a = attempt.achieved[k];
      const auto& t = thresholds[k];
      if (a.theta > t.theta * (1.0 + slack) ||
          a.distance > t.distance * (1.0 + slack) ||
          a.speed > t.speed * (1.0 + slack))
        within = false;
    }
    if (!have_best || attempt.objective > best.objective) {
      best = attempt;
      have_best = true;
    }
    if (within) return attempt;

    // Tighten proportionally to the worst violation and retry.
    for (int k = 0; k < static_cast<int>(prob.vehicles.size()); ++k) {
      const auto& a = attempt.achieved[k];
      const auto& t = thresholds[k];
      auto tighten = [](double cur, double ach, double want) {
        if (!(ach > want)) return cur;
        return cur * std::max(0.25, want / ach);
      };
      current[k].theta = tighten(current[k].theta, a.theta, t.theta);
      current[k].distance = tighten(current[k].distance, a.distance, t.distance);
      current[k].speed = tighten(current[k].speed, a.speed, t.speed);
    }
  }
  return best;
}

}  // namespace maisac
