#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"
#include "phom/characteristics.hpp"

namespace phom {

/// 64-bit FNV-1a hash as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// Long format, one row per (path, macro time): path_id,t,x1,x2.
void write_ensemble_csv(std::ostream& out, const TrajectoryEnsemble& ens);

/// Sidecar describing an ensemble file: kind, eps, seed, modes fingerprint,
/// grid sizes and the generating configuration.
nlohmann::ordered_json ensemble_sidecar(const TrajectoryEnsemble& ens, const nlohmann::ordered_json& config);

/// Creates parent directories as needed; throws std::runtime_error on failure.
void write_text_file(const std::string& path, std::string_view text);
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

/// Writes <stem>.csv and <stem>.json into dir.
void write_ensemble(const std::string& dir, const std::string& stem, const TrajectoryEnsemble& ens,
                    const nlohmann::ordered_json& config);

/// Shortest round-trip decimal form of a double.
std::string format_real(double v);

}  // namespace phom
