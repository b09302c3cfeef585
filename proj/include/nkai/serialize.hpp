// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nkai/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace nkai {

using Json = nlohmann::json;

/// Malformed configuration; the message names the offending field.
struct ConfigError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

// Geometry: {"kind": "nested", "M1": 4, "M2": 4, "d1": 0.5} or
//           {"kind": "ula", "M": 20, "d": 0.5}.
Json to_json(const ArrayGeometry& geom);
ArrayGeometry geometry_from_json(const Json& j, std::string_view where = "geometry");

/// One synthesized realization: scenario plus snapshot count and seed.
struct ScenarioSpec {
  SourceScenario scenario;
  int snapshots = 150;
  std::uint64_t seed = 1;
};

// {"doas_deg": [...], "snr_db": x | "powers": [...], "noise_power": s, "n_snapshots": N, "seed": k}
Json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const Json& j, std::string_view where = "scenario");

Json to_json(const KaiConfig& config);
KaiConfig kai_config_from_json(const Json& j, std::string_view where = "kai");

Json to_json(const KaiTrace& trace);

Json to_json(const ExperimentConfig& config);
/// Reads the documented experiment schema; `sweep` may be left to the caller.
ExperimentConfig experiment_from_json(const Json& j);

/// Minimal TOML reader (tables, dotted table headers, strings, numbers,
/// booleans, possibly multi-line arrays, inline tables) producing JSON.
Json parse_toml(std::string_view text);

/// Loads a .toml or .json config file into JSON.
Json load_config_file(const std::filesystem::path& path);

// Matrix dumps. CSV: one line per row, re,im pairs interleaved. Binary:
// int64 rows, int64 cols, then rows*cols (re, im) float64 pairs, row-major,
// host byte order.
void write_matrix_csv(std::ostream& os, const CMatrix& m);
CMatrix read_matrix_csv(std::istream& is);
void write_matrix_binary(std::ostream& os, const CMatrix& m);
CMatrix read_matrix_binary(std::istream& is);

/// Two columns: angle_deg,value.
void write_spectrum_csv(std::ostream& os, const Pseudospectrum& spectrum);

/// Shortest round-trip representation of a double ("nan"/"inf" for
/// non-finite values).
std::string format_number(double x);

}  // namespace nkai
