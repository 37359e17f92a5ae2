// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#include "maisac/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace maisac {

namespace {
constexpr double kPi = 3.14159265358979323846;

using nlohmann::json;

// Tracks which keys were read so unknown keys can be rejected, and which
// implementation-chosen values fell back to defaults (the provenance block).
class Section {
 public:
  Section(json j, std::string name, std::vector<std::string>* provenance)
      : j_(std::move(j)), name_(std::move(name)), provenance_(provenance) {}

  ~Section() = default;

  double number(const char* key, double fallback, bool sourced_value) {
    return get<double>(key, fallback, sourced_value);
  }
  int integer(const char* key, int fallback, bool sourced_value) {
    return get<int>(key, fallback, sourced_value);
  }
  std::string text(const char* key, const std::string& fallback,
                   bool sourced_value) {
    return get<std::string>(key, fallback, sourced_value);
  }
  std::uint64_t unsigned64(const char* key, std::uint64_t fallback,
                           bool sourced_value) {
    return get<std::uint64_t>(key, fallback, sourced_value);
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
    }
  }

  const json& raw() const { return j_; }

 private:
  template <typename T>
  T get(const char* key, T fallback, bool sourced_value) {
    seen_.insert(key);
    if (j_.contains(key)) {
      try {
        return j_.at(key).get<T>();
      } catch (const json::exception&) {
        throw ConfigError("key '" + name_ + "." + key + "' has the wrong type");
      }
    }
    if (!sourced_value && provenance_)
      provenance_->push_back(name_ + "." + key);
    return fallback;
  }

  json j_;
  std::string name_;
  std::vector<std::string>* provenance_;
  std::set<std::string> seen_;
};

json section_of(const json& doc, const char* key) {
  if (!doc.contains(key)) return json::object();
  if (!doc.at(key).is_object())
    throw ConfigError(std::string("section '") + key + "' must be an object");
  return doc.at(key);
}
}  // namespace

RunConfig parse_config_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig out;
  auto& sc = out.scenario;
  std::vector<std::string>* prov = &out.assumed_defaults;

  static const std::set<std::string> known_sections = {
      "system", "array",    "vehicles", "motion", "objective",
      "solver", "swarm",    "pga",      "tracking", "output", "seed"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known_sections.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "'");
  }

  // system ------------------------------------------------------------
  {
    Section s(section_of(doc, "system"), "system", prov);
    const double fc = s.number("carrier_frequency_hz", 28.0e9, true);
    if (!(fc > 0.0)) throw ConfigError("system.carrier_frequency_hz must be positive");
    sc.cfg.lightspeed = 299792458.0;
    sc.cfg.wavelength = sc.cfg.lightspeed / fc;
    sc.cfg.num_subcarriers = s.integer("num_subcarriers", 32, true);
    sc.cfg.num_blocks = s.integer("num_blocks", 7, true);
    sc.cfg.subcarrier_spacing = s.number("subcarrier_spacing_hz", 120.0e3, true);
    sc.cfg.symbol_duration = s.number("symbol_duration_s", 8.92e-6, true);
    sc.cfg.useful_duration = 1.0 / sc.cfg.subcarrier_spacing;
    if (s.has("useful_duration_s")) {
      const double te = s.number("useful_duration_s", sc.cfg.useful_duration, true);
      if (std::abs(te * sc.cfg.subcarrier_spacing - 1.0) > 1e-9)
        throw ConfigError(
            "system.useful_duration_s inconsistent: delta_f must equal 1/T_e");
      sc.cfg.useful_duration = te;
    }
    sc.cfg.cyclic_prefix = sc.cfg.symbol_duration - sc.cfg.useful_duration;
    if (sc.cfg.cyclic_prefix < -1e-12)
      throw ConfigError("system: symbol duration shorter than 1/delta_f");
    if (sc.cfg.cyclic_prefix < 0.0) sc.cfg.cyclic_prefix = 0.0;
    sc.cfg.comm_noise_psd = s.number("comm_noise_psd_w_per_hz", 1.0e-23, true);
    sc.cfg.radar_noise_psd = s.number("radar_noise_psd_w_per_hz", 1.1e-25, true);
    sc.cfg.total_power = s.number("total_power_w", 1.0, true);
    sc.cfg.rcs = s.number("rcs_m2", 0.1, true);
    const double a0_db = s.number("ref_path_loss_db", -70.0, true);
    sc.cfg.ref_path_loss = std::pow(10.0, a0_db / 10.0);
    sc.cfg.ref_distance = s.number("ref_distance_m", 1.0, true);
    sc.cfg.path_loss_exponent = s.number("path_loss_exponent", 2.55, true);
    if (s.has("subcarrier_groups")) {
      const auto& g = s.raw().at("subcarrier_groups");
      if (!g.is_array())
        throw ConfigError("system.subcarrier_groups must be an array of arrays");
      for (const auto& grp : g) {
        if (!grp.is_array())
          throw ConfigError("system.subcarrier_groups must be an array of arrays");
        std::vector<int> idx;
        for (const auto& v : grp) idx.push_back(v.get<int>());
        sc.groups.push_back(std::move(idx));
      }
    }
    s.finish();
    sc.cfg.validate();
  }

  // array ---------------------------------------------------------------
  int m_tx = 8;
  int m_rx = 8;
  {
    Section s(section_of(doc, "array"), "array", prov);
    m_tx = s.integer("num_tx", 8, true);
    m_rx = s.integer("num_rx", 8, true);
    const double tx_region =
        s.number("tx_region_wavelengths", 7.0, true) * sc.cfg.wavelength;
    const double rx_region =
        s.number("rx_region_wavelengths", 7.0, true) * sc.cfg.wavelength;
    const double spacing =
        s.number("min_spacing_wavelengths", 0.5, true) * sc.cfg.wavelength;
    const double gap =
        s.number("tx_rx_gap_wavelengths", 0.5, true) * sc.cfg.wavelength;
    s.finish();
    if (m_tx < 1 || m_rx < 1) throw ConfigError("array: need at least one antenna");
    sc.layout = ArrayLayout::ula(m_tx, m_rx, sc.cfg.wavelength,
                                 tx_region, rx_region);
    sc.layout.min_spacing = spacing;
    sc.layout.tx_rx_gap = gap;
    sc.layout.rx_min = sc.layout.tx_max + gap;
    sc.layout.rx_max = sc.layout.rx_min + rx_region;
    sc.layout.rx_positions =
        VectorXd::LinSpaced(m_rx, 0.0, (m_rx - 1) * sc.cfg.wavelength / 2.0);
    sc.layout.rx_positions.array() += sc.layout.rx_min;
    sc.layout.validate();
  }

  // vehicles -------------------------------------------------------------
  if (doc.contains("vehicles")) {
    if (!doc.at("vehicles").is_array())
      throw ConfigError("vehicles must be an array");
    for (size_t i = 0; i < doc.at("vehicles").size(); ++i) {
      Section s(doc.at("vehicles")[i], "vehicles[" + std::to_string(i) + "]",
                prov);
      VehicleState v;
      const double theta_deg = s.number("theta_deg", 90.0, true);
      if (!(theta_deg > 0.0 && theta_deg < 180.0))
        throw ConfigError("vehicles.theta_deg must lie in (0, 180)");
      v.theta = theta_deg * kPi / 180.0;
      v.distance = s.number("distance_m", 400.0, true);
      if (!(v.distance > 0.0))
        throw ConfigError("vehicles.distance_m must be positive");
      v.speed = s.number("speed_mps", 0.0, true);
      s.finish();
      sc.vehicles.push_back(v);
    }
  } else {
    sc.vehicles = {VehicleState{9.2 * kPi / 180.0, 400.0, 20.0},
                   VehicleState{12.0 * kPi / 180.0, 410.0, 18.0}};
  }

  // motion ----------------------------------------------------------------
  {
    Section s(section_of(doc, "motion"), "motion", prov);
    sc.motion.slot_duration = s.number("slot_duration_s", 0.02, false);
    sc.motion.sigma_theta = s.number("sigma_theta_rad", 1.0e-4, false);
    sc.motion.sigma_d = s.number("sigma_d_m", 0.1, false);
    sc.motion.sigma_nu = s.number("sigma_nu_mps", 0.1, false);
    sc.motion.dnu_min = s.number("speed_increment_min_mps", 0.0, false);
    sc.motion.dnu_max = s.number("speed_increment_max_mps", 0.0, false);
    s.finish();
    if (sc.motion.dnu_min > sc.motion.dnu_max)
      throw ConfigError("motion: speed increment bounds out of order");
  }

  // objective ---------------------------------------------------------------
  {
    Section s(section_of(doc, "objective"), "objective", prov);
    sc.objective.rho = s.number("rho", 0.5, false);
    if (!(sc.objective.rho >= 0.0 && sc.objective.rho <= 1.0))
      throw ConfigError("objective.rho must lie in [0, 1]");
    if (s.has("thresholds")) {
      Section t(s.raw().at("thresholds"), "objective.thresholds", prov);
      BoundTriple thr;
      thr.theta = t.number("theta_rad2", 2.0e-4, true);
      thr.distance = t.number("distance_m2", 0.05, true);
      thr.speed = t.number("speed_mps2", 1.0, true);
      t.finish();
      if (!(thr.theta > 0.0 && thr.distance > 0.0 && thr.speed > 0.0))
        throw ConfigError("objective.thresholds must be positive");
      sc.objective.thresholds.assign(sc.vehicles.size(), thr);
    }
    s.finish();
  }

  // solver ----------------------------------------------------------------
  {
    Section s(section_of(doc, "solver"), "solver", prov);
    sc.sdp.contract.tolerance = s.number("tolerance", 1.0e-6, false);
    sc.sdp.contract.max_iterations = s.integer("max_iterations", 8000, false);
    sc.sdp.randomize_samples = s.integer("randomize_samples", 100, false);
    s.finish();
  }

  // swarm ------------------------------------------------------------------
  {
    Section s(section_of(doc, "swarm"), "swarm", prov);
    sc.swarm.particles = s.integer("particles", 10, true);
    sc.swarm.iterations = s.integer("iterations", 20, true);
    sc.swarm.w_min = s.number("w_min", 0.4, false);
    sc.swarm.w_max = s.number("w_max", 0.9, false);
    sc.swarm.c1 = s.number("c1", 1.5, false);
    sc.swarm.c2 = s.number("c2", 1.5, false);
    sc.swarm.sf1 = s.number("sf1", 0.2, false);
    sc.swarm.sf2 = s.number("sf2", 0.5, false);
    sc.swarm.sf3 = s.number("sf3", 0.3, false);
    sc.swarm.penalty = s.number("penalty", 100.0, false);
    sc.swarm.retention_threshold = s.integer("retention_threshold", 5, false);
    s.finish();
    sc.swarm.validate();
  }

  // pga ----------------------------------------------------------------------
  {
    Section s(section_of(doc, "pga"), "pga", prov);
    sc.pga.step_scale = s.number("step_wavelengths", 0.1, false);
    sc.pga.max_iterations = s.integer("max_iterations", 200, false);
    sc.pga.tolerance = s.number("tolerance", 1.0e-7, false);
    sc.pga.literal_lower_anchor =
        s.integer("literal_lower_anchor", 0, false) != 0;
    sc.pga.euclidean_projection =
        s.integer("euclidean_projection", 0, false) != 0;
    s.finish();
  }

  // tracking -------------------------------------------------------------------
  {
    Section s(section_of(doc, "tracking"), "tracking", prov);
    sc.horizon = s.integer("horizon_slots", 2, false);
    sc.init_sigma[0] = s.number("init_sigma_theta_rad", 1.0e-3, false);
    sc.init_sigma[1] = s.number("init_sigma_d_m", 1.0, false);
    sc.init_sigma[2] = s.number("init_sigma_nu_mps", 0.5, false);
    s.finish();
  }

  // output --------------------------------------------------------------------
  {
    Section s(section_of(doc, "output"), "output", prov);
    const char* env_dir = std::getenv("MAISAC_OUT_DIR");
    out.output_dir = s.text("dir", env_dir ? env_dir : "out", false);
    out.format = s.text("format", "csv", false);
    s.finish();
    if (out.format != "csv" && out.format != "json")
      throw ConfigError("output.format must be 'csv' or 'json'");
  }

  if (doc.contains("seed")) {
    sc.seed = doc.at("seed").get<std::uint64_t>();
  } else {
    sc.seed = 1;
    prov->push_back("seed");
  }

  sc.validate();
  out.config_hash = config_hash(out);
  return out;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) text = "{}";
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config_json(doc);
}

nlohmann::json serialize_config(const RunConfig& cfg) {
  const auto& sc = cfg.scenario;
  json doc;
  doc["system"] = {
      {"carrier_frequency_hz", sc.cfg.lightspeed / sc.cfg.wavelength},
      {"num_subcarriers", sc.cfg.num_subcarriers},
      {"num_blocks", sc.cfg.num_blocks},
      {"subcarrier_spacing_hz", sc.cfg.subcarrier_spacing},
      {"symbol_duration_s", sc.cfg.symbol_duration},
      {"comm_noise_psd_w_per_hz", sc.cfg.comm_noise_psd},
      {"radar_noise_psd_w_per_hz", sc.cfg.radar_noise_psd},
      {"total_power_w", sc.cfg.total_power},
      {"rcs_m2", sc.cfg.rcs},
      {"ref_path_loss_db", 10.0 * std::log10(sc.cfg.ref_path_loss)},
      {"ref_distance_m", sc.cfg.ref_distance},
      {"path_loss_exponent", sc.cfg.path_loss_exponent}};
  if (!sc.groups.empty()) doc["system"]["subcarrier_groups"] = sc.groups;
  doc["array"] = {
      {"num_tx", sc.layout.num_tx()},
      {"num_rx", sc.layout.num_rx()},
      {"tx_region_wavelengths",
       (sc.layout.tx_max - sc.layout.tx_min) / sc.cfg.wavelength},
      {"rx_region_wavelengths",
       (sc.layout.rx_max - sc.layout.rx_min) / sc.cfg.wavelength},
      {"min_spacing_wavelengths", sc.layout.min_spacing / sc.cfg.wavelength},
      {"tx_rx_gap_wavelengths", sc.layout.tx_rx_gap / sc.cfg.wavelength}};
  doc["vehicles"] = json::array();
  for (const auto& v : sc.vehicles) {
    doc["vehicles"].push_back({{"theta_deg", v.theta * 180.0 / kPi},
                               {"distance_m", v.distance},
                               {"speed_mps", v.speed}});
  }
  doc["motion"] = {{"slot_duration_s", sc.motion.slot_duration},
                   {"sigma_theta_rad", sc.motion.sigma_theta},
                   {"sigma_d_m", sc.motion.sigma_d},
                   {"sigma_nu_mps", sc.motion.sigma_nu},
                   {"speed_increment_min_mps", sc.motion.dnu_min},
                   {"speed_increment_max_mps", sc.motion.dnu_max}};
  doc["objective"] = {{"rho", sc.objective.rho}};
  if (sc.objective.qos_mode()) {
    doc["objective"]["thresholds"] = {
        {"theta_rad2", sc.objective.thresholds[0].theta},
        {"distance_m2", sc.objective.thresholds[0].distance},
        {"speed_mps2", sc.objective.thresholds[0].speed}};
  }
  doc["solver"] = {{"tolerance", sc.sdp.contract.tolerance},
                   {"max_iterations", sc.sdp.contract.max_iterations},
                   {"randomize_samples", sc.sdp.randomize_samples}};
  doc["swarm"] = {{"particles", sc.swarm.particles},
                  {"iterations", sc.swarm.iterations},
                  {"w_min", sc.swarm.w_min},
                  {"w_max", sc.swarm.w_max},
                  {"c1", sc.swarm.c1},
                  {"c2", sc.swarm.c2},
                  {"sf1", sc.swarm.sf1},
                  {"sf2", sc.swarm.sf2},
                  {"sf3", sc.swarm.sf3},
                  {"penalty", sc.swarm.penalty},
                  {"retention_threshold", sc.swarm.retention_threshold}};
  doc["pga"] = {{"step_wavelengths", sc.pga.step_scale},
                {"max_iterations", sc.pga.max_iterations},
                {"tolerance", sc.pga.tolerance},
                {"literal_lower_anchor", sc.pga.literal_lower_anchor ? 1 : 0},
                {"euclidean_projection", sc.pga.euclidean_projection ? 1 : 0}};
  doc["tracking"] = {{"horizon_slots", sc.horizon},
                     {"init_sigma_theta_rad", sc.init_sigma[0]},
                     {"init_sigma_d_m", sc.init_sigma[1]},
                     {"init_sigma_nu_mps", sc.init_sigma[2]}};
  doc["output"] = {{"dir", cfg.output_dir}, {"format", cfg.format}};
  doc["seed"] = sc.seed;
  return doc;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  RunConfig plain = cfg;
  plain.config_hash = 0;
  // The hash identifies the scenario; output routing is not part of it.
  plain.output_dir = "";
  plain.format = "csv";
  const std::string text = serialize_config(plain).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_slot_csv(const std::string& path,
                    const std::vector<SlotRecord>& records, int n_vehicles) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "slot,sum_rate_bits,sum_rate_per_subcarrier";
  for (int k = 0; k < n_vehicles; ++k) {
    out << ",lpcrlb_theta_" << k << ",lpcrlb_d_" << k << ",lpcrlb_nu_" << k
        << ",pcrlb_theta_" << k << ",pcrlb_d_" << k << ",pcrlb_nu_" << k
        << ",true_theta_" << k << ",true_d_" << k << ",true_nu_" << k
        << ",est_theta_" << k << ",est_d_" << k << ",est_nu_" << k;
  }
  out << ",feasible,runtime_ms\n";
  for (const auto& r : records) {
    out << r.slot << ',' << format_double(r.sum_rate) << ','
        << format_double(r.sum_rate_per_subcarrier);
    for (int k = 0; k < n_vehicles; ++k) {
      out << ',' << format_double(r.lpcrlb[k].theta) << ','
          << format_double(r.lpcrlb[k].distance) << ','
          << format_double(r.lpcrlb[k].speed) << ','
          << format_double(r.pcrlb[3 * k]) << ','
          << format_double(r.pcrlb[3 * k + 1]) << ','
          << format_double(r.pcrlb[3 * k + 2]) << ','
          << format_double(r.true_state[k].theta) << ','
          << format_double(r.true_state[k].distance) << ','
          << format_double(r.true_state[k].speed) << ','
          << format_double(r.tracked_state[k].theta) << ','
          << format_double(r.tracked_state[k].distance) << ','
          << format_double(r.tracked_state[k].speed);
    }
    out << ',' << (r.feasible ? 1 : 0) << ','
        << format_double(r.runtime_ms) << '\n';
  }
}

void write_xy(const std::string& path, const std::vector<double>& x,
              const std::vector<double>& y) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (size_t i = 0; i < x.size() && i < y.size(); ++i)
    out << format_double(x[i]) << ' ' << format_double(y[i]) << '\n';
}

void write_metadata(const std::string& path, const RunConfig& cfg,
                    const Eigen::Vector3d& aleph,
                    const std::vector<std::pair<std::string, double>>& extra) {
  nlohmann::json doc;
  doc["seed"] = cfg.scenario.seed;
  doc["config_hash"] = config_hash(cfg);
  doc["aleph"] = {aleph[0], aleph[1], aleph[2]};
  doc["solver_tolerance"] = cfg.scenario.sdp.contract.tolerance;
  doc["assumed_defaults"] = cfg.assumed_defaults;
  for (const auto& [key, value] : extra) doc[key] = value;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace maisac

namespace maisac {
namespace {
nlohmann::json slot_to_json(const SlotRecord& r, int n_vehicles) {
  nlohmann::json j;
  j["slot"] = r.slot;
  j["sum_rate_bits"] = r.sum_rate;
  j["sum_rate_per_subcarrier"] = r.sum_rate_per_subcarrier;
  j["feasible"] = r.feasible;
  j["runtime_ms"] = r.runtime_ms;
  for (int k = 0; k < n_vehicles; ++k) {
    nlohmann::json v;
    v["lpcrlb"] = {r.lpcrlb[k].theta, r.lpcrlb[k].distance, r.lpcrlb[k].speed};
    v["pcrlb"] = {r.pcrlb[3 * k], r.pcrlb[3 * k + 1], r.pcrlb[3 * k + 2]};
    v["true_state"] = {r.true_state[k].theta, r.true_state[k].distance,
                       r.true_state[k].speed};
    v["tracked_state"] = {r.tracked_state[k].theta,
                          r.tracked_state[k].distance,
                          r.tracked_state[k].speed};
    j["vehicles"].push_back(v);
  }
  return j;
}
}  // namespace

void write_slot_json(const std::string& path,
                     const std::vector<SlotRecord>& records, int n_vehicles) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : records) doc.push_back(slot_to_json(r, n_vehicles));
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace maisac
