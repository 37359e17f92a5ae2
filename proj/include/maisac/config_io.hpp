// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_CONFIG_IO_HPP
#define MAISAC_CONFIG_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "maisac/orchestrator.hpp"
#include "maisac/types.hpp"

namespace maisac {

/// Parsed scenario plus output policy and provenance. Every field of the
/// JSON document carries an explicit unit suffix; unknown keys are rejected.
struct RunConfig {
  Scenario scenario;
  std::string output_dir = "out";
  std::string format = "csv";
  /// Defaults that are implementation choices rather than constants of
  /// the reference simulation setup.
  std::vector<std::string> assumed_defaults;
  std::uint64_t config_hash = 0;
};

/// Parse a JSON config file. An empty or "{}" document yields the
/// reference simulation defaults. Schema violations raise ConfigError with the
/// offending key; physically inconsistent values raise ConfigError too.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& doc);

/// Canonical serialization; parse(serialize(cfg)) reproduces the scenario.
nlohmann::json serialize_config(const RunConfig& cfg);

/// FNV-1a 64-bit over the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);

/// 17-significant-digit formatting; re-parses to the identical double.
std::string format_double(double v);

/// Per-slot CSV with a fixed column set for K vehicles.
void write_slot_csv(const std::string& path,
                    const std::vector<SlotRecord>& records, int n_vehicles);

/// Same records as a JSON array.
void write_slot_json(const std::string& path,
                     const std::vector<SlotRecord>& records, int n_vehicles);

/// Two-column whitespace-separated plot data.
void write_xy(const std::string& path, const std::vector<double>& x,
              const std::vector<double>& y);

/// Run metadata: seed, config hash, aleph, tolerances, iteration counts and
/// the provenance block of assumed defaults.
void write_metadata(const std::string& path, const RunConfig& cfg,
                    const Eigen::Vector3d& aleph,
                    const std::vector<std::pair<std::string, double>>& extra);

}  // namespace maisac

#endif  // MAISAC_CONFIG_IO_HPP
