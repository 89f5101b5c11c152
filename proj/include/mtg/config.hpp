#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtg/game.hpp"
#include "mtg/grid.hpp"
#include "mtg/solver.hpp"

// Run configuration: a single text file with named sections and key=value
// entries. Blank lines and lines starting with '#' are skipped; a '#' after
// the value starts a trailing comment. Expression values are quoted.
//
//   [game]
//   catalog = remark1          # or an inline definition, see docs/config.md
//   m = 1
//   control_samples = 21
//
//   [grid]
//   time_nodes = 50
//   state_lo = -1
//   state_hi = 1
//   state_nodes = 41
//
// Section names: game, grid, solver, verify, synthesize, output. Every parse
// problem raises ConfigError with "<file>:<line>:" prefixed to the message.
namespace mtg {

struct VerifyConfig {
  // Subset of {"ordering", "dpp", "oracle", "viscosity"}; parse order is
  // kept, duplicates rejected.
  std::vector<std::string> checks{"ordering", "dpp", "oracle", "viscosity"};
  std::uint64_t seed = 2026;
  int test_family = 100;        // quadratic draws for the viscosity suite
  std::vector<int> box_steps;   // dpp window per axis; empty means all ones
  double dpp_tolerance = 1e-12;
  double oracle_tolerance = 0.1;
  double ordering_tolerance = 1e-9;
};

struct SynthesizeConfig {
  std::vector<double> start_time;   // defaults to the zero corner
  std::vector<double> start_state;  // defaults to the state-box center
  HamiltonianKind kind = HamiltonianKind::Upper;
};

struct OutputConfig {
  std::string dir = "out";
  bool components = true;  // also write component CSVs next to value CSVs
};

struct RunConfig {
  std::string origin;  // name used in error messages
  std::string text;    // raw file content; hashed into every artifact

  // [game]
  std::string catalog;  // empty means the inline fields below describe it
  int m = 1;
  int control_samples = 21;
  GameInstance inline_game;  // fully built during parsing when inline

  // [grid]
  std::vector<int> time_nodes;    // per axis; a single entry replicates
  std::vector<double> state_lo, state_hi;
  std::vector<int> state_nodes;

  SolverOptions solver;
  VerifyConfig verify;
  SynthesizeConfig synthesize;
  OutputConfig output;

  std::string hash() const;  // fnv1a64 of text, fixed-width hex
};

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin);
RunConfig parse_config_file(const std::string& path);

// Instance described by the config: catalog lookup or the inline definition.
GameInstance config_instance(const RunConfig& cfg);

// Grid described by [grid] for that instance; time axes span [0, horizon].
MultitimeGrid config_grid(const RunConfig& cfg, const GameInstance& game);

}  // namespace mtg
