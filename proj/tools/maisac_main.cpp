// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "maisac/config_io.hpp"
#include "maisac/model.hpp"
#include "maisac/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace maisac;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double rho = -1.0;
  double dmax_lambda = 0.0;
  int slots = 0;
  std::string format;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "JSON config path");
  cmd->add_option("--out", args->out_dir, "output directory");
  cmd->add_option("--seed", args->seed, "RNG seed")
      ->each([args](const std::string&) { args->seed_set = true; });
  cmd->add_option("--rho", args->rho, "weighting factor in [0,1]");
  cmd->add_option("--dmax-lambda", args->dmax_lambda,
                  "feasible region length in wavelengths");
  cmd->add_option("--slots", args->slots, "tracking horizon in slots");
  cmd->add_option("--format", args->format, "csv|json");
}

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty()
                      ? parse_config_json(nlohmann::json::object())
                      : parse_config(args.config_path);
  if (args.seed_set) cfg.scenario.seed = args.seed;
  if (args.rho >= 0.0) cfg.scenario.objective.rho = args.rho;
  if (args.slots > 0) cfg.scenario.horizon = args.slots;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (!args.format.empty()) cfg.format = args.format;
  if (args.dmax_lambda > 0.0) {
    const auto& c = cfg.scenario.cfg;
    cfg.scenario.layout = ArrayLayout::ula(
        cfg.scenario.layout.num_tx(), cfg.scenario.layout.num_rx(),
        c.wavelength, args.dmax_lambda * c.wavelength,
        args.dmax_lambda * c.wavelength);
  }
  cfg.config_hash = config_hash(cfg);
  fs::create_directories(cfg.output_dir);
  return cfg;
}

std::vector<Eigen::Matrix3d> initial_priors(const Scenario& sc) {
  const TrackState track = make_initial_track(sc.vehicles, sc.init_sigma, sc.seed);
  const MatrixXd jp = prior_fim(track, sc.motion);
  std::vector<Eigen::Matrix3d> out;
  for (int k = 0; k < jp.rows() / 3; ++k)
    out.push_back(jp.block<3, 3>(3 * k, 3 * k));
  return out;
}

int cmd_bounds(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const Scenario& sc = cfg.scenario;

  // Shared per-subcarrier power level (fixed-SNR sweep convention).
  const double p_ref = sc.cfg.total_power / sc.cfg.num_subcarriers;
  auto bounds_at = [&](int n_sub, int q, int m_rx) {
    SystemConfig c = sc.cfg;
    c.num_subcarriers = n_sub;
    c.num_blocks = q;
    c.total_power = p_ref * n_sub;
    ArrayLayout layout = ArrayLayout::ula(
        sc.layout.num_tx(), m_rx, c.wavelength,
        sc.layout.tx_max - sc.layout.tx_min,
        std::max((m_rx - 1) * c.wavelength / 2.0,
                 sc.layout.rx_max - sc.layout.rx_min));
    std::vector<BoundTriple> out;
    BeamformerSet beams = matched_beams(c, layout, sc.vehicles);
    for (const auto& v : sc.vehicles) {
      const FisherBlocks b = g_blocks(c, layout, beams, v);
      out.push_back(lcrlb(fim_zeta_block(c, b, v, beams.powers)));
    }
    return out;
  };

  const int n0 = sc.cfg.num_subcarriers;
  const int q0 = sc.cfg.num_blocks;
  const int r0 = sc.layout.num_rx();
  std::vector<double> xs, th, dd, vv;
  std::cout << "# LCRLB sweeps (vehicle 0), fixed per-subcarrier power\n";
  auto emit = [&](const std::string& name, auto value_of, int base) {
    xs.clear();
    th.clear();
    dd.clear();
    vv.clear();
    for (int mult : {1, 2, 4}) {
      const auto b = value_of(base * mult);
      xs.push_back(base * mult);
      th.push_back(b[0].theta);
      dd.push_back(b[0].distance);
      vv.push_back(b[0].speed);
      std::cout << name << "=" << base * mult << " lcrlb_theta="
                << format_double(b[0].theta)
                << " lcrlb_d=" << format_double(b[0].distance)
                << " lcrlb_nu=" << format_double(b[0].speed) << "\n";
    }
    write_xy(cfg.output_dir + "/bounds_vs_" + name + "_d.dat", xs, dd);
    write_xy(cfg.output_dir + "/bounds_vs_" + name + "_nu.dat", xs, vv);
    write_xy(cfg.output_dir + "/bounds_vs_" + name + "_theta.dat", xs, th);
  };
  emit("N", [&](int n) { return bounds_at(n, q0, r0); }, n0);
  emit("Q", [&](int q) { return bounds_at(n0, q, r0); }, q0);
  emit("Mrx", [&](int m) { return bounds_at(n0, q0, m); }, r0);

  // LPCRLB at the initial prior, default configuration.
  const auto priors = initial_priors(sc);
  BeamformerSet beams = matched_beams(sc.cfg, sc.layout, sc.vehicles);
  for (int k = 0; k < static_cast<int>(sc.vehicles.size()); ++k) {
    const FisherBlocks b = g_blocks(sc.cfg, sc.layout, beams, sc.vehicles[k]);
    const BoundTriple lp =
        lpcrlb(fim_zeta_block(sc.cfg, b, sc.vehicles[k], beams.powers),
               priors[k]);
    std::cout << "vehicle " << k << " lpcrlb_theta=" << format_double(lp.theta)
              << " lpcrlb_d=" << format_double(lp.distance)
              << " lpcrlb_nu=" << format_double(lp.speed) << "\n";
  }
  write_metadata(cfg.output_dir + "/metadata.json", cfg,
                 Eigen::Vector3d::Zero(), {});
  return 0;
}

int cmd_optimize_weighted(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const AoResult r = run_p1_ao(cfg.scenario);
  std::vector<double> iters, trace;
  for (size_t i = 0; i < r.trace.size(); ++i) {
    iters.push_back(static_cast<double>(i));
    trace.push_back(r.trace[i]);
  }
  write_xy(cfg.output_dir + "/convergence.dat", iters, trace);
  {
    std::ofstream out(cfg.output_dir + "/layout.dat");
    for (int l = 0; l < r.layout.num_tx(); ++l)
      out << format_double(r.layout.tx_positions[l]) << '\n';
    for (int l = 0; l < r.layout.num_rx(); ++l)
      out << format_double(r.layout.rx_positions[l]) << '\n';
  }
  write_metadata(cfg.output_dir + "/metadata.json", cfg, r.aleph,
                 {{"objective", r.objective},
                  {"outer_iterations", static_cast<double>(r.outer_iterations)},
                  {"converged", r.converged ? 1.0 : 0.0}});
  std::cout << "objective " << format_double(r.objective) << "\n"
            << "outer_iterations " << r.outer_iterations << "\n"
            << "converged " << (r.converged ? 1 : 0) << "\n";
  return 0;
}

int cmd_optimize_qos(const CommonArgs& args, bool baseline) {
  RunConfig cfg = load(args);
  if (!cfg.scenario.objective.qos_mode()) {
    cfg.scenario.objective.thresholds.assign(
        cfg.scenario.vehicles.size(), BoundTriple{2.0e-4, 0.05, 1.0});
    cfg.assumed_defaults.push_back("objective.thresholds(applied default)");
  }
  const std::vector<SlotRecord> recs =
      baseline ? baseline_ulah(cfg.scenario) : run_two_stage(cfg.scenario);
  if (cfg.format == "json")
    write_slot_json(cfg.output_dir + "/slots.json", recs,
                    static_cast<int>(cfg.scenario.vehicles.size()));
  else
    write_slot_csv(cfg.output_dir + "/slots.csv", recs,
                   static_cast<int>(cfg.scenario.vehicles.size()));
  write_metadata(cfg.output_dir + "/metadata.json", cfg,
                 Eigen::Vector3d::Zero(),
                 {{"slots", static_cast<double>(recs.size())}});
  bool any_infeasible = false;
  for (const auto& r : recs) {
    std::cout << "slot " << r.slot << " sum_rate "
              << format_double(r.sum_rate_per_subcarrier) << " per-subcarrier ("
              << format_double(r.sum_rate) << " total), feasible "
              << (r.feasible ? 1 : 0) << "\n";
    any_infeasible = any_infeasible || !r.feasible;
  }
  return any_infeasible ? 2 : 0;
}

int cmd_track(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const Scenario& sc = cfg.scenario;
  std::vector<VehicleState> truth = sc.vehicles;
  TrackState track = make_initial_track(truth, sc.init_sigma, sc.seed);
  BeamformerSet beams = matched_beams(sc.cfg, sc.layout, truth);
  Rng rng = Rng(sc.seed).fork(0x747261636bull);

  std::vector<SlotRecord> recs;
  for (int m = 1; m <= sc.horizon; ++m) {
    SlotRecord rec;
    rec.slot = m;
    rec.seed = sc.seed;
    const TrackState pred = ekf_predict(track, sc.motion);
    const MatrixXd jp = prior_fim(track, sc.motion);
    rec.predicted_state = pred.vehicles();
    std::vector<VehicleState> next;
    for (const auto& v : truth)
      next.push_back(propagate_state(v, sc.motion, sample_motion(sc.motion, rng)));
    truth = next;
    rec.true_state = truth;
    rec.layout_used = sc.layout;
    beams = matched_beams(sc.cfg, sc.layout, pred.vehicles());
    rec.sum_rate = sum_rate(sc.cfg, sc.layout, beams, pred.vehicles());
    rec.sum_rate_per_subcarrier = rec.sum_rate / sc.cfg.num_subcarriers;
    for (int k = 0; k < static_cast<int>(truth.size()); ++k) {
      const FisherBlocks b = g_blocks(sc.cfg, sc.layout, beams, pred.vehicle(k));
      rec.lpcrlb.push_back(lpcrlb(
          fim_zeta_block(sc.cfg, b, pred.vehicle(k), beams.powers),
          jp.block<3, 3>(3 * k, 3 * k)));
    }
    const MatrixXd j_obs = fim_zeta_full(sc.cfg, sc.layout, beams, pred.vehicles());
    rec.pcrlb = pcrlb_diag(j_obs, jp, true);
    const EchoMeasurement echo =
        synth_echo(sc.cfg, sc.layout, beams, truth, sc.seed + 4099ull * m);
    track = ekf_step(track, echo, sc.cfg, sc.layout, beams, sc.motion);
    rec.tracked_state = track.vehicles();
    rec.track_cov_diag = track.covariance.diagonal();
    rec.objective = rec.sum_rate;
    recs.push_back(std::move(rec));
  }
  write_slot_csv(cfg.output_dir + "/track.csv", recs,
                 static_cast<int>(sc.vehicles.size()));
  write_metadata(cfg.output_dir + "/metadata.json", cfg,
                 Eigen::Vector3d::Zero(),
                 {{"slots", static_cast<double>(recs.size())}});
  std::cout << "tracked " << recs.size() << " slots\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  std::vector<double> rhos;
  for (int i = 0; i <= 10; ++i) rhos.push_back(0.1 * i);
  const auto pts = run_tradeoff_sweep(cfg.scenario, rhos);
  std::vector<double> rate, lp_metric, pc_metric, lp_theta, pc_theta;
  for (const auto& pt : pts) {
    rate.push_back(pt.sum_rate);
    lp_metric.push_back(pt.sensing_lpcrlb_metric);
    pc_metric.push_back(pt.sensing_pcrlb_metric);
    lp_theta.push_back(pt.lpcrlb[0].theta);
    pc_theta.push_back(pt.pcrlb[0]);
    std::cout << "rho " << format_double(pt.rho) << " rate "
              << format_double(pt.sum_rate) << " sensing "
              << format_double(pt.sensing_lpcrlb_metric) << "\n";
  }
  write_xy(cfg.output_dir + "/tradeoff.dat", rate, lp_metric);
  write_xy(cfg.output_dir + "/tradeoff_lpcrlb_theta.dat", rate, lp_theta);
  write_xy(cfg.output_dir + "/tradeoff_pcrlb_theta.dat", rate, pc_theta);
  write_metadata(cfg.output_dir + "/metadata.json", cfg,
                 Eigen::Vector3d::Zero(),
                 {{"points", static_cast<double>(pts.size())}});
  return 0;
}

int cmd_report(const CommonArgs& args) {
  const std::string dir = args.out_dir.empty() ? "out" : args.out_dir;
  const std::string meta_path = dir + "/metadata.json";
  std::ifstream meta(meta_path);
  if (!meta) {
    std::cerr << "no metadata at " << meta_path << "\n";
    return 1;
  }
  nlohmann::json doc;
  meta >> doc;
  std::cout << "run summary for " << dir << "\n";
  std::cout << "  seed: " << doc.value("seed", 0ull) << "\n";
  std::cout << "  config hash: " << doc.value("config_hash", 0ull) << "\n";
  if (doc.contains("objective"))
    std::cout << "  objective: " << doc["objective"].get<double>() << "\n";
  if (doc.contains("assumed_defaults")) {
    std::cout << "  assumed defaults applied:\n";
    for (const auto& s : doc["assumed_defaults"])
      std::cout << "    " << s.get<std::string>() << "\n";
  }
  for (const char* name : {"slots.csv", "track.csv"}) {
    std::ifstream csv(dir + "/" + std::string(name));
    if (!csv) continue;
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    std::cout << "  " << name << ": " << rows << " rows\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movable-antenna ISAC beamforming and tracking toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* bounds = app.add_subcommand("bounds", "sensing bound tables");
  auto* optw = app.add_subcommand("optimize-weighted",
                                  "weighted-sum alternating optimization");
  auto* optq = app.add_subcommand("optimize-qos",
                                  "two-stage QoS-constrained tracking loop");
  auto* track = app.add_subcommand("track", "EKF tracking with fixed beams");
  auto* sweep = app.add_subcommand("sweep", "communication/sensing trade-off");
  auto* report = app.add_subcommand("report", "summarize a result directory");
  bool baseline = false;
  optq->add_flag("--baseline", baseline, "pin the half-wavelength ULA layout");
  for (auto* cmd : {bounds, optw, optq, track, sweep, report})
    add_common(cmd, &args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (bounds->parsed()) return cmd_bounds(args);
    if (optw->parsed()) return cmd_optimize_weighted(args);
    if (optq->parsed()) return cmd_optimize_qos(args, baseline);
    if (track->parsed()) return cmd_track(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << " (" << e.constraint_name()
              << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
