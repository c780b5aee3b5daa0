// Serialization: JSON layouts and raw little-endian float64 arrays with JSON sidecars.
#pragma once

#include "heisenberg/haar.hpp"
#include "heisenberg/tiling.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>

namespace heisenberg {

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& s);

void write_f64_le(const std::string& path, const double* data, std::size_t count);
void read_f64_le(const std::string& path, double* data, std::size_t count);

nlohmann::ordered_json to_json(const TileId& T);
TileId tile_from_json(const nlohmann::json& j);

/// {"region": {root, depth}, "sampling": ..., "values": [...]}.
nlohmann::ordered_json to_json(const SymbolGrid& g);
SymbolGrid grid_from_json(const nlohmann::json& j);

/// Writes <stem>.json (layout) and <stem>.f64 (values) for a grid.
void save_grid(const std::string& stem, const SymbolGrid& g);
SymbolGrid load_grid(const std::string& stem);

/// Coefficients keyed by (level, base, epsilon): one entry per tile with its M-1 values.
nlohmann::ordered_json to_json(const HaarCoefficients& c);
HaarCoefficients coefficients_from_json(const nlohmann::json& j);

/// Dense row-major matrix as <stem>.f64 plus a sidecar carrying the supplied metadata.
void save_matrix(const std::string& stem, const Eigen::MatrixXd& A, nlohmann::ordered_json meta);
Eigen::MatrixXd load_matrix(const std::string& stem);

}  // namespace heisenberg
