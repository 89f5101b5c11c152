#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mtg/grid.hpp"
#include "mtg/synthesis.hpp"
#include "mtg/verify.hpp"

// File writers shared by the command-line front end. All numeric text uses
// seventeen significant digits so that a written double round-trips exactly;
// JSON objects keep their keys sorted. Together with seeded randomness this
// makes repeated runs byte-identical (wall-clock timing files are the one
// documented exception).
namespace mtg::io {

// Shortest exact decimal form of a double ('%.17g').
std::string format_double(double v);

// FNV-1a 64-bit hash of a text blob, and its fixed-width hex spelling.
std::uint64_t fnv1a64(std::string_view text);
std::string hash_hex(std::uint64_t h);

// Scalar field as CSV: a comment line carrying the field name and config
// hash, a header row t1..tm,x1..xn,value, then one row per grid node in flat
// index order.
void write_value_csv(const std::string& path, const ValueField& field,
                     const std::string& config_hash);

// Component field as CSV with columns component1..componentm after the
// coordinates.
void write_components_csv(const std::string& path,
                          const GeneratingField& field,
                          const std::string& config_hash);

// Sheet as CSV: step,t1..tm,x1..xn,u1..up,v1..vq,accumulated_cost.
void write_sheet_csv(const std::string& path, const Sheet& sheet,
                     int u_dim, int v_dim, const std::string& config_hash);

// Pretty-printed JSON with a trailing newline.
void write_json(const std::string& path, const nlohmann::json& doc);

nlohmann::json grid_json(const MultitimeGrid& grid);
nlohmann::json violation_json(const Violation& v);
nlohmann::json report_json(const ViolationReport& report);

}  // namespace mtg::io
