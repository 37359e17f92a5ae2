#include <cmath>

#include "doctest.h"
#include "maisac/power.hpp"
#include "oracles.hpp"

using namespace maisac;
using maisac::testing::rel_err;

namespace {

PowerProblem problem_from_scene(const maisac::testing::SmallScene& s,
                                const BoundTriple* thresholds = nullptr) {
  PowerProblem prob;
  prob.budget = s.cfg.total_power;
  prob.gains = VectorXd::Zero(s.cfg.num_subcarriers);
  const auto owner = s.beams.owner_of_subcarrier();
  for (int n = 0; n < s.cfg.num_subcarriers; ++n) {
    const int k = owner[n];
    const VectorXcd a =
        steering(s.layout.tx_positions, s.vehicles[k].theta, s.cfg.wavelength);
    const double alpha = channel_gains(s.cfg, s.vehicles[k].distance).path_loss;
    prob.gains[n] = alpha * std::norm(a.dot(s.beams.beams[n])) *
                    s.cfg.useful_duration / s.cfg.comm_noise_psd;
  }
  for (const auto& v : s.vehicles) {
    PowerProblem::VehicleSensing vs;
    vs.blocks = g_blocks(s.cfg, s.layout, s.beams, v);
    vs.weights = zeta_weights(s.cfg, v);
    if (thresholds) vs.thresholds = *thresholds;
    prob.vehicles.push_back(vs);
  }
  return prob;
}

BoundTriple bounds_at(const maisac::testing::SmallScene& s, const VectorXd& p,
                      int k) {
  const FisherBlocks b = g_blocks(s.cfg, s.layout, s.beams, s.vehicles[k]);
  return lpcrlb(fim_zeta_block(s.cfg, b, s.vehicles[k], p),
                Eigen::Matrix3d::Zero());
}

}  // namespace

TEST_CASE("waterfill: equal gains split the budget uniformly") {
  const VectorXd gains = VectorXd::Constant(8, 3.0e5);
  const PowerResult r = waterfill(gains, 2.0, 0.0);
  for (int i = 0; i < 8; ++i) CHECK(rel_err(r.p[i], 0.25) < 1e-9);
  CHECK(std::abs(r.p.sum() - 2.0) < 1e-10);
}

TEST_CASE("waterfill: dominant gain takes all power when budget is tiny") {
  VectorXd gains(4);
  gains << 1.0e3, 1.0e7, 1.0e3, 1.0e3;
  const PowerResult r = waterfill(gains, 1e-5, 0.0);
  CHECK(r.p[1] > 0.999e-5);
  CHECK(r.p[0] == 0.0);
  CHECK(r.p[2] == 0.0);
  CHECK(std::abs(r.p.sum() - 1e-5) < 1e-15);
}

TEST_CASE("waterfill: zero gains fall back to uniform with a warning") {
  const PowerResult r = waterfill(VectorXd::Zero(4), 1.0, 0.0);
  CHECK(r.note != "");
  for (int i = 0; i < 4; ++i) CHECK(rel_err(r.p[i], 0.25) < 1e-12);
}

TEST_CASE("waterfill: budget residual within 1e-10") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd gains(6);
    for (int i = 0; i < 6; ++i) gains[i] = std::exp(rng.uniform(5.0, 16.0));
    const PowerResult r = waterfill(gains, rng.uniform(0.1, 4.0), 0.0);
    CHECK(std::abs(r.p.sum() / r.p.sum() - 1.0) == 0.0);  // finite
    CHECK(r.kkt_residual < 1e-10);
  }
}

TEST_CASE("solve_power_qos: no sensing constraints reduce to water-filling") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    PowerProblem prob;
    prob.budget = 1.0;
    prob.gains = VectorXd(4);
    for (int i = 0; i < 4; ++i) prob.gains[i] = std::exp(rng.uniform(8.0, 15.0));
    const PowerResult qos = solve_power_qos(prob);
    const PowerResult wf = waterfill(prob.gains, 1.0, 0.0);
    REQUIRE(qos.status == SolveStatus::optimal);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(qos.p[i] - wf.p[i]) < 1e-6);
    CHECK(std::abs(qos.objective - wf.objective) < 1e-6);
  }
}

TEST_CASE("solve_power_qos: equal gains, no sensing -> uniform") {
  PowerProblem prob;
  prob.budget = 1.0;
  prob.gains = VectorXd::Constant(8, 2.0e5);
  const PowerResult r = solve_power_qos(prob);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(r.p[i] - 0.125) < 1e-6);
}

TEST_CASE("solve_power_qos: two-gain split matches closed form") {
  PowerProblem prob;
  prob.budget = 1.0;
  prob.gains = VectorXd(2);
  prob.gains << 4.0e0, 4.0e-1;  // low SNR so the split is non-trivial
  const PowerResult r = solve_power_qos(prob);
  const PowerResult wf = waterfill(prob.gains, 1.0, 0.0);
  CHECK(std::abs(r.p[0] - wf.p[0]) < 1e-6);
  CHECK(std::abs(r.p[1] - wf.p[1]) < 1e-6);
}

TEST_CASE("solve_power_qos: binding sensing constraints are honored") {
  auto s = maisac::testing::small_scene(2, 61, /*randomize_beams=*/false);

  // Reference: unconstrained allocation and the bounds it achieves.
  PowerProblem unconstrained = problem_from_scene(s);
  unconstrained.vehicles.clear();
  const PowerResult free_alloc = solve_power_qos(unconstrained);
  const BoundTriple free_b0 = bounds_at(s, free_alloc.p, 0);

  // Tighten the theta threshold below what the rate-optimal allocation
  // achieves but above the best achievable, forcing a binding constraint.
  const VectorXd best_theta_p = [&] {
    const FisherBlocks b = g_blocks(s.cfg, s.layout, s.beams, s.vehicles[0]);
    const ZetaWeights w = zeta_weights(s.cfg, s.vehicles[0]);
    const VectorXd t_theta = w.th_g11 * b.g11 + w.th_g13 * b.g13 + w.th_g33 * b.g33;
    VectorXd p = VectorXd::Zero(s.cfg.num_subcarriers);
    int best = 0;
    for (int n = 1; n < t_theta.size(); ++n)
      if (t_theta[n] > t_theta[best]) best = n;
    p[best] = s.cfg.total_power;
    return p;
  }();
  const double best_theta_bound = [&] {
    const FisherBlocks b = g_blocks(s.cfg, s.layout, s.beams, s.vehicles[0]);
    return lcrlb(fim_zeta_block(s.cfg, b, s.vehicles[0], best_theta_p)).theta;
  }();
  REQUIRE(best_theta_bound < free_b0.theta);

  BoundTriple thr;
  thr.theta = std::sqrt(best_theta_bound * free_b0.theta);  // between the two
  thr.distance = 10.0 * free_b0.distance;
  thr.speed = 10.0 * free_b0.speed;
  PowerProblem prob = problem_from_scene(s, &thr);
  // Only vehicle 0 carries the binding theta requirement; the other one gets
  // loose thresholds so the instance stays feasible.
  const BoundTriple free_b1 = bounds_at(s, free_alloc.p, 1);
  prob.vehicles[1].thresholds.theta = 100.0 * free_b1.theta;
  prob.vehicles[1].thresholds.distance = 100.0 * free_b1.distance;
  prob.vehicles[1].thresholds.speed = 100.0 * free_b1.speed;

  const PowerResult r = solve_power_qos(prob);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(std::abs(r.p.sum() - s.cfg.total_power) < 1e-5);
  const BoundTriple achieved = bounds_at(s, r.p, 0);
  CHECK(achieved.theta <= thr.theta * (1.0 + 1e-6));
  CHECK(r.objective <= free_alloc.objective + 1e-9);
  // Invariants on the returned vector.
  CHECK(r.p.minCoeff() > -1e-12);
  CHECK(r.p.sum() <= s.cfg.total_power + 1e-9);
}

TEST_CASE("solve_power_qos: impossible thresholds reported infeasible") {
  auto s = maisac::testing::small_scene(1, 73, /*randomize_beams=*/false);
  BoundTriple thr;
  thr.theta = 1e-30;  // unreachable
  thr.distance = 1e10;
  thr.speed = 1e10;
  PowerProblem prob = problem_from_scene(s, &thr);
  const PowerResult r = solve_power_qos(prob);
  CHECK(r.status == SolveStatus::infeasible);
  CHECK(r.note.find("theta") != std::string::npos);
}

TEST_CASE("psi_matrices: boundary, slack and sign equivalence") {
  auto s = maisac::testing::small_scene(1, 3, /*randomize_beams=*/false);
  const FisherBlocks b = g_blocks(s.cfg, s.layout, s.beams, s.vehicles[0]);
  const ZetaWeights w = zeta_weights(s.cfg, s.vehicles[0]);
  const VectorXd p = s.beams.powers;
  const BoundTriple achieved =
      lpcrlb(fim_zeta_block(s.cfg, b, s.vehicles[0], p), Eigen::Matrix3d::Zero());

  // Threshold exactly at the achieved bound: determinant hits zero.
  const PsiMatrices at = psi_matrices(b, Eigen::Matrix3d::Zero(), w,
                                      achieved.distance, achieved.speed, p);
  CHECK(std::abs(at.psi_d.determinant()) <
        1e-9 * std::abs(at.psi_d(0, 0) * at.psi_d(1, 1)) + 1e-30);
  CHECK(std::abs(at.psi_v.determinant()) <
        1e-9 * std::abs(at.psi_v(0, 0) * at.psi_v(1, 1)) + 1e-30);

  // Loose thresholds: PSD.
  const PsiMatrices loose = psi_matrices(b, Eigen::Matrix3d::Zero(), w,
                                         1e6 * achieved.distance,
                                         1e6 * achieved.speed, p);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> esd(loose.psi_d);
  CHECK(esd.eigenvalues().minCoeff() > 0.0);

  // Random instances: min-eigenvalue sign matches the direct comparison.
  Rng rng(17);
  int agreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd pr(s.cfg.num_subcarriers);
    for (int i = 0; i < pr.size(); ++i) pr[i] = rng.uniform(0.0, 0.3);
    const double td = achieved.distance * std::exp(rng.uniform(-2.0, 2.0));
    const double tv = achieved.speed * std::exp(rng.uniform(-2.0, 2.0));
    BoundTriple got;
    bool pd_ok = true;
    try {
      got = lpcrlb(fim_zeta_block(s.cfg, b, s.vehicles[0], pr),
                   Eigen::Matrix3d::Zero());
    } catch (const InfeasibleError&) {
      pd_ok = false;
    }
    if (!pd_ok) continue;
    const PsiMatrices psi =
        psi_matrices(b, Eigen::Matrix3d::Zero(), w, td, tv, pr);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ed(psi.psi_d);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ev(psi.psi_v);
    const double tol = 1e-10;
    const bool lmi_d = ed.eigenvalues().minCoeff() >= -tol * psi.psi_d.norm();
    const bool lmi_v = ev.eigenvalues().minCoeff() >= -tol * psi.psi_v.norm();
    const bool direct_d = got.distance <= td * (1.0 + 1e-10);
    const bool direct_v = got.speed <= tv * (1.0 + 1e-10);
    CHECK(lmi_d == direct_d);
    CHECK(lmi_v == direct_v);
    ++agreements;
  }
  CHECK(agreements > 150);
}

TEST_CASE("solve_power_weighted: rho = 1 equals plain water-filling") {
  auto s = maisac::testing::small_scene(2, 37, /*randomize_beams=*/false);
  PowerProblem prob = problem_from_scene(s);
  const PowerResult w = solve_power_weighted(prob, 1.0, Eigen::Vector3d::Ones());
  const PowerResult wf = waterfill(prob.gains, prob.budget, 0.0);
  for (int i = 0; i < prob.gains.size(); ++i)
    CHECK(std::abs(w.p[i] - wf.p[i]) < 1e-10);
}

TEST_CASE("solve_power_weighted: rho = 0 concentrates on the best coefficient") {
  auto s = maisac::testing::small_scene(2, 43, /*randomize_beams=*/false);
  PowerProblem prob = problem_from_scene(s);
  const Eigen::Vector3d aleph(1.0, 1e-18, 1e-22);
  const PowerResult r = solve_power_weighted(prob, 0.0, aleph);
  const VectorXd sigma = weighted_sensing_coefficients(prob, aleph);
  int best = 0;
  for (int i = 1; i < sigma.size(); ++i)
    if (sigma[i] > sigma[best]) best = i;
  CHECK(r.p[best] == prob.budget);
  CHECK(r.p.sum() == prob.budget);
}

TEST_CASE("solve_power_weighted: mid rho dominates both endpoint policies") {
  auto s = maisac::testing::small_scene(2, 51, /*randomize_beams=*/false);
  PowerProblem prob = problem_from_scene(s);
  // Aleph scaled so sensing terms are O(1) like the orchestrator does.
  const VectorXd probe = VectorXd::Constant(prob.gains.size(),
                                            prob.budget / prob.gains.size());
  Eigen::Vector3d aleph;
  {
    PowerProblem tmp = prob;
    Eigen::Vector3d raw = Eigen::Vector3d::Zero();
    for (const auto& v : tmp.vehicles) {
      const auto& w = v.weights;
      raw[0] += (w.th_g11 * v.blocks.g11 + w.th_g13 * v.blocks.g13 +
                 w.th_g33 * v.blocks.g33)
                    .dot(probe);
      raw[1] += w.dd_g22 * v.blocks.g22.dot(probe);
      raw[2] += w.vv_g33 * v.blocks.g33.dot(probe);
    }
    for (int i = 0; i < 3; ++i) aleph[i] = 1.0 / std::max(raw[i], 1e-300);
  }
  const double rho = 0.5;
  const VectorXd sigma = weighted_sensing_coefficients(prob, aleph);
  auto weighted_obj = [&](const VectorXd& p) {
    double v = (1.0 - rho) * sigma.dot(p);
    for (int i = 0; i < p.size(); ++i)
      v += rho * std::log2(1.0 + prob.gains[i] * p[i]);
    return v;
  };
  const PowerResult mid = solve_power_weighted(prob, rho, aleph);
  const PowerResult lo = solve_power_weighted(prob, 0.0, aleph);
  const PowerResult hi = solve_power_weighted(prob, 1.0, aleph);
  CHECK(weighted_obj(mid.p) >= weighted_obj(lo.p) - 1e-9);
  CHECK(weighted_obj(mid.p) >= weighted_obj(hi.p) - 1e-9);
  CHECK(mid.p.minCoeff() > -1e-12);
  CHECK(mid.p.sum() <= prob.budget + 1e-9);
}

TEST_CASE("solve_power_weighted: rho = 0 ties break to the lowest index") {
  PowerProblem prob;
  prob.budget = 1.0;
  prob.gains = VectorXd::Constant(4, 1.0e5);
  PowerProblem::VehicleSensing vs;
  // Hand-built blocks with identical sensing coefficients on every carrier.
  vs.blocks.g11 = VectorXd::Constant(4, 1.0);
  vs.blocks.g13 = VectorXd::Zero(4);
  vs.blocks.g33 = VectorXd::Zero(4);
  vs.blocks.g22 = VectorXd::Zero(4);
  vs.blocks.g23 = VectorXd::Zero(4);
  vs.blocks.g12 = VectorXd::Zero(4);
  vs.blocks.g12_im = VectorXd::Zero(4);
  vs.blocks.g13_im = VectorXd::Zero(4);
  vs.weights.th_g11 = 1.0;
  prob.vehicles.push_back(vs);
  const PowerResult r = solve_power_weighted(prob, 0.0, Eigen::Vector3d::Ones());
  CHECK(r.p[0] == 1.0);
  CHECK(r.p.tail(3).sum() == 0.0);
}
