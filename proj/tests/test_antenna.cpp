#include <cmath>

#include "doctest.h"
#include "maisac/antenna.hpp"
#include "maisac/model.hpp"
#include "oracles.hpp"

using namespace maisac;
using maisac::testing::rel_err;

namespace {
constexpr double kPi = 3.14159265358979323846;

struct TxSetup {
  maisac::testing::SmallScene scene;
  Eigen::Vector3d aleph;
  std::vector<Eigen::Matrix3d> priors;
};

TxSetup tx_setup(std::uint64_t seed, int n_veh = 2) {
  TxSetup s;
  s.scene = maisac::testing::small_scene(n_veh, seed, /*randomize_beams=*/false);
  Eigen::Vector3d raw = Eigen::Vector3d::Zero();
  for (const auto& v : s.scene.vehicles) {
    const FisherBlocks b = g_blocks(s.scene.cfg, s.scene.layout, s.scene.beams, v);
    const BoundTriple bt = lcrlb(
        fim_zeta_block(s.scene.cfg, b, v, s.scene.beams.powers));
    raw[0] += 1.0 / bt.theta;
    raw[1] += 1.0 / bt.distance;
    raw[2] += 1.0 / bt.speed;
  }
  s.aleph = raw.cwiseInverse();
  s.priors.assign(n_veh, Eigen::Matrix3d::Zero());
  return s;
}
}  // namespace

TEST_CASE("xi identity: real forms equal complex quadratic forms") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
    VectorXd pos(m);
    pos[0] = rng.uniform(0.0, 0.01);
    for (int l = 1; l < m; ++l) pos[l] = pos[l - 1] + rng.uniform(0.004, 0.02);
    const double theta = rng.uniform(0.1, kPi - 0.1);
    const double lam = 0.0107068735;
    VectorXcd w(m);
    for (int l = 0; l < m; ++l) {
      const double ph = rng.uniform(0.0, 2.0 * kPi);
      w[l] = cplx(std::cos(ph), std::sin(ph));
    }
    const TrigForms t = trig_forms(pos, theta, lam, w);
    const XiTerms xi = xi_terms(t, pos);

    const VectorXcd a = steering(pos, theta, lam);
    VectorXcd la(m);
    for (int l = 0; l < m; ++l) la[l] = pos[l] * a[l];
    const double want_xi = std::norm(a.dot(w));
    const double want_xi1 = std::norm(la.dot(w));
    const cplx aw = a.dot(w);
    const cplx law = a.dot(VectorXcd(pos.asDiagonal() * w));  // a^H L w
    const cplx want_xi2 = std::conj(law) * aw;  // w^H L G w
    CHECK(rel_err(xi.xi, want_xi) < 1e-10);
    CHECK(rel_err(xi.xi1, want_xi1) < 1e-10);
    CHECK(std::abs(xi.xi2 - want_xi2) < 1e-10 * std::abs(want_xi2) + 1e-12);
    CHECK(std::abs(xi.xi3 - std::conj(xi.xi2)) == 0.0);

    // Antisymmetry is exact.
    CHECK((t.u_mat + t.u_mat.transpose()).norm() == 0.0);
    CHECK((t.d_mat + t.d_mat.transpose()).norm() == 0.0);
    // f^2 + s^2 = 1 entrywise.
    for (int l = 0; l < m; ++l)
      CHECK(rel_err(t.f[l] * t.f[l] + t.s[l] * t.s[l], 1.0) < 1e-12);
  }
}

TEST_CASE("xi terms: zero position operator and scalar case") {
  VectorXd pos = VectorXd::Zero(3);
  VectorXcd w(3);
  w << cplx(1, 0), cplx(0, 1), cplx(-1, 0);
  const TrigForms t = trig_forms(pos, 1.1, 0.0107068735, w);
  const XiTerms xi = xi_terms(t, pos);
  CHECK(xi.xi1 == 0.0);
  CHECK(std::abs(xi.xi2) == 0.0);
  CHECK(std::abs(xi.xi3) == 0.0);

  VectorXd single = VectorXd::Zero(1);
  VectorXcd w1(1);
  w1 << cplx(0.6, 0.8);
  const TrigForms t1 = trig_forms(single, 0.7, 0.0107068735, w1);
  const XiTerms xi_1 = xi_terms(t1, single);
  CHECK(rel_err(xi_1.xi, 1.0) < 1e-12);  // |w|^2 = h^2 + d^2 = 1
}

TEST_CASE("grad_tx: rate-only gradient matches central differences") {
  // Randomized beams keep the start away from the matched stationary point.
  auto s = tx_setup(401, 1);
  s.scene = maisac::testing::small_scene(1, 401, /*randomize_beams=*/true);
  const auto& sc = s.scene;
  auto f = [&](const VectorXd& p) {
    ArrayLayout l = sc.layout;
    l.tx_positions = p;
    return tx_objective(sc.cfg, l, sc.beams, sc.vehicles, 1.0, s.aleph,
                        s.priors);
  };
  const VectorXd g = grad_tx(sc.cfg, sc.layout, sc.beams, sc.vehicles, 1.0,
                             s.aleph, s.priors);
  const VectorXd fd = maisac::testing::fd_gradient(
      f, sc.layout.tx_positions, 1e-7 * sc.cfg.wavelength);
  CHECK((g - fd).norm() / fd.norm() < 1e-5);
}

TEST_CASE("grad_tx: broadside vehicle contributes no rate gradient") {
  auto s = tx_setup(402, 1);
  auto& sc = s.scene;
  sc.vehicles[0].theta = kPi / 2.0;
  sc.beams = matched_beams(sc.cfg, sc.layout, sc.vehicles);
  const VectorXd g = grad_tx(sc.cfg, sc.layout, sc.beams, sc.vehicles, 1.0,
                             s.aleph, s.priors);
  CHECK(g.norm() < 1e-30);  // cos(theta) = 0 kills every Omega_1/Omega_2 term
}

TEST_CASE("grad_tx: full weighted gradient matches central differences") {
  for (std::uint64_t seed : {403ull, 404ull, 405ull}) {
    auto s = tx_setup(seed, 2);
    const auto& sc = s.scene;
    const double rho = 0.5;
    auto f = [&](const VectorXd& p) {
      ArrayLayout l = sc.layout;
      l.tx_positions = p;
      return tx_objective(sc.cfg, l, sc.beams, sc.vehicles, rho, s.aleph,
                          s.priors);
    };
    const VectorXd g = grad_tx(sc.cfg, sc.layout, sc.beams, sc.vehicles, rho,
                               s.aleph, s.priors);
    const VectorXd fd = maisac::testing::fd_gradient(
        f, sc.layout.tx_positions, 1e-7 * sc.cfg.wavelength);
    CHECK((g - fd).norm() / fd.norm() < 1e-4);
  }
}

TEST_CASE("grad_rx matches central differences of the rx objective") {
  for (std::uint64_t seed : {406ull, 407ull}) {
    auto s = tx_setup(seed, 2);
    const auto& sc = s.scene;
    auto f = [&](const VectorXd& p) {
      ArrayLayout l = sc.layout;
      l.rx_positions = p;
      return rx_objective(sc.cfg, l, sc.beams, sc.vehicles, s.priors);
    };
    const VectorXd g = grad_rx(sc.cfg, sc.layout, sc.beams, sc.vehicles);
    const VectorXd fd = maisac::testing::fd_gradient(
        f, sc.layout.rx_positions, 1e-7 * sc.cfg.wavelength);
    CHECK((g - fd).norm() / fd.norm() < 1e-5);
  }
}

TEST_CASE("project_tx: idempotent, clamps, and always feasible") {
  SystemConfig cfg;
  ArrayLayout layout = ArrayLayout::ula(4, 4, cfg.wavelength,
                                        4.0 * cfg.wavelength,
                                        4.0 * cfg.wavelength);
  // Feasible candidate returned unchanged.
  const VectorXd same = project_tx(layout.tx_positions, layout);
  CHECK((same - layout.tx_positions).norm() == 0.0);

  // Low candidate clamps to the lower envelope.
  VectorXd low(4);
  low << -cfg.wavelength, -cfg.wavelength, -cfg.wavelength, -cfg.wavelength;
  const VectorXd clamped = project_tx(low, layout);
  const bool at_lower =
      rel_err(clamped[0], layout.tx_min) < 1e-12 || clamped[0] == layout.tx_min;
  CHECK(at_lower);
  for (int l = 1; l < 4; ++l)
    CHECK(clamped[l] - clamped[l - 1] >= layout.min_spacing - 1e-12);

  // Random candidates: output satisfies spacing and bounds, idempotence.
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd cand(4);
    for (int l = 0; l < 4; ++l)
      cand[l] = rng.uniform(layout.tx_min - 3.0 * cfg.wavelength,
                            layout.tx_max + 3.0 * cfg.wavelength);
    const VectorXd p = project_tx(cand, layout);
    CHECK(p[0] >= layout.tx_min - 1e-12);
    CHECK(p[3] <= layout.tx_max + 1e-12);
    for (int l = 1; l < 4; ++l)
      CHECK(p[l] - p[l - 1] >= layout.min_spacing - 1e-12);
    CHECK((project_tx(p, layout) - p).norm() < 1e-15);
  }

  // Region too small.
  ArrayLayout tiny = layout;
  tiny.tx_max = tiny.tx_min + cfg.wavelength;  // 4 antennas need 1.5 lambda
  CHECK_THROWS_AS(project_tx(low, tiny), ConfigError);
}

TEST_CASE("project_rx: right-anchored clamp keeps feasibility") {
  SystemConfig cfg;
  ArrayLayout layout = ArrayLayout::ula(4, 4, cfg.wavelength,
                                        4.0 * cfg.wavelength,
                                        4.0 * cfg.wavelength);
  Rng rng(78);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd cand(4);
    for (int l = 0; l < 4; ++l)
      cand[l] = rng.uniform(layout.rx_min - 3.0 * cfg.wavelength,
                            layout.rx_max + 3.0 * cfg.wavelength);
    const VectorXd p = project_rx(cand, layout);
    CHECK(p[0] >= layout.rx_min - 1e-12);
    CHECK(p[3] <= layout.rx_max + 1e-12);
    for (int l = 1; l < 4; ++l)
      CHECK(p[l] - p[l - 1] >= layout.min_spacing - 1e-12);
    CHECK((project_rx(p, layout) - p).norm() < 1e-15);
  }
  const VectorXd same = project_rx(layout.rx_positions, layout);
  CHECK((same - layout.rx_positions).norm() < 1e-12);
}

TEST_CASE("pga_tx: monotone trace, feasible iterates, improves the objective") {
  auto s = tx_setup(408, 2);
  const auto& sc = s.scene;
  const PgaResult r = pga_tx(sc.cfg, sc.layout, sc.beams, sc.vehicles, 0.5,
                             s.aleph, s.priors);
  REQUIRE(r.trace.size() >= 1);
  for (size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
  CHECK(r.trace.back() >= r.trace.front());
  // Feasibility of the final iterate.
  for (int l = 1; l < r.positions.size(); ++l)
    CHECK(r.positions[l] - r.positions[l - 1] >= sc.layout.min_spacing - 1e-12);
  CHECK(r.positions[0] >= sc.layout.tx_min - 1e-12);
  CHECK(r.positions[r.positions.size() - 1] <= sc.layout.tx_max + 1e-12);
}

TEST_CASE("pga_tx: stationary start returns immediately") {
  // Single broadside vehicle, rho = 1: the rate gradient vanishes.
  auto s = tx_setup(409, 1);
  auto sc = s.scene;
  sc.vehicles[0].theta = kPi / 2.0;
  sc.beams = matched_beams(sc.cfg, sc.layout, sc.vehicles);
  const PgaResult r = pga_tx(sc.cfg, sc.layout, sc.beams, sc.vehicles, 1.0,
                             s.aleph, s.priors);
  CHECK(r.trace.size() == 1);
  // The start itself may need projection; no ascent step happens after it.
  CHECK((r.positions - project_tx(sc.layout.tx_positions, sc.layout)).norm() <
        1e-12);
}

TEST_CASE("pga_rx: monotone, d/v bounds unchanged, near grid optimum (M=2)") {
  auto s = tx_setup(410, 1);
  auto sc = s.scene;
  // Two receive antennas only.
  ArrayLayout layout = sc.layout;
  layout.rx_positions = VectorXd(2);
  layout.rx_positions << layout.rx_min, layout.rx_min + sc.cfg.wavelength / 2.0;

  const FisherBlocks before =
      g_blocks(sc.cfg, layout, sc.beams, sc.vehicles[0]);
  const BoundTriple before_b =
      lcrlb(fim_zeta_block(sc.cfg, before, sc.vehicles[0], sc.beams.powers));

  const PgaResult r =
      pga_rx(sc.cfg, layout, sc.beams, sc.vehicles, s.priors);
  for (size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);

  ArrayLayout moved = layout;
  moved.rx_positions = r.positions;
  const FisherBlocks after = g_blocks(sc.cfg, moved, sc.beams, sc.vehicles[0]);
  const BoundTriple after_b =
      lcrlb(fim_zeta_block(sc.cfg, after, sc.vehicles[0], sc.beams.powers));
  CHECK(after_b.distance == before_b.distance);
  CHECK(after_b.speed == before_b.speed);
  CHECK(after_b.theta <= before_b.theta * (1.0 + 1e-12));

  // Exhaustive grid at lambda/50 resolution over feasible ordered pairs.
  double grid_best = -1e300;
  const double step = sc.cfg.wavelength / 50.0;
  ArrayLayout probe = layout;
  for (double p1 = layout.rx_min; p1 <= layout.rx_max; p1 += step) {
    for (double p2 = p1 + layout.min_spacing; p2 <= layout.rx_max; p2 += step) {
      probe.rx_positions << p1, p2;
      const double obj =
          rx_objective(sc.cfg, probe, sc.beams, sc.vehicles, s.priors);
      if (obj > grid_best) grid_best = obj;
    }
  }
  CHECK(r.trace.back() >= 0.99 * grid_best);
}

TEST_CASE("euclidean projection: feasible, idempotent, L2-optimal vs clamps") {
  SystemConfig cfg;
  ArrayLayout layout = ArrayLayout::ula(4, 4, cfg.wavelength,
                                        4.0 * cfg.wavelength,
                                        4.0 * cfg.wavelength);
  Rng rng(91);
  for (int trial = 0; trial < 500; ++trial) {
    VectorXd cand(4);
    for (int l = 0; l < 4; ++l)
      cand[l] = rng.uniform(layout.tx_min - 2.0 * cfg.wavelength,
                            layout.tx_max + 2.0 * cfg.wavelength);
    const VectorXd e = project_ordered_euclidean(cand, layout.tx_min,
                                                 layout.tx_max,
                                                 layout.min_spacing);
    CHECK(e[0] >= layout.tx_min - 1e-12);
    CHECK(e[3] <= layout.tx_max + 1e-12);
    for (int l = 1; l < 4; ++l)
      CHECK(e[l] - e[l - 1] >= layout.min_spacing - 1e-12);
    const VectorXd again = project_ordered_euclidean(e, layout.tx_min,
                                                     layout.tx_max,
                                                     layout.min_spacing);
    CHECK((again - e).norm() < 1e-12);
    // Euclidean optimality: never farther than the sequential clamp.
    const VectorXd seq = project_tx(cand, layout);
    CHECK((e - cand).norm() <= (seq - cand).norm() + 1e-12);
  }
  // Feasible candidates are fixed points.
  const VectorXd same = project_ordered_euclidean(
      layout.tx_positions, layout.tx_min, layout.tx_max, layout.min_spacing);
  CHECK((same - layout.tx_positions).norm() < 1e-12);
}

TEST_CASE("pga_tx strictly improves on the ULA start when sensing matters") {
  // Binding-regime noise level so the aperture term carries real weight.
  SystemConfig cfg;
  cfg.validate();
  cfg.radar_noise_psd *= 150.0;
  ArrayLayout layout = ArrayLayout::ula(8, 8, cfg.wavelength,
                                        7.0 * cfg.wavelength,
                                        7.0 * cfg.wavelength);
  // Center the starting ULA in the region so the boundary is not already
  // binding for the translation-sensitive information terms.
  layout.tx_positions.array() += 0.5 * (layout.tx_max - layout.tx_positions[7]);
  std::vector<VehicleState> veh = {VehicleState{9.2 * kPi / 180.0, 400.0, 20.0},
                                   VehicleState{12.0 * kPi / 180.0, 410.0, 18.0}};
  BeamformerSet beams = matched_beams(cfg, layout, veh);
  std::vector<Eigen::Matrix3d> priors(2, Eigen::Matrix3d::Zero());
  Eigen::Vector3d raw = Eigen::Vector3d::Zero();
  for (const auto& v : veh) {
    const FisherBlocks b = g_blocks(cfg, layout, beams, v);
    const BoundTriple bt = lcrlb(fim_zeta_block(cfg, b, v, beams.powers));
    raw[0] += 1.0 / bt.theta;
    raw[1] += 1.0 / bt.distance;
    raw[2] += 1.0 / bt.speed;
  }
  const Eigen::Vector3d aleph = raw.cwiseInverse();
  const PgaResult r = pga_tx(cfg, layout, beams, veh, 0.5, aleph, priors);
  CHECK(r.trace.back() > r.trace.front());
}
