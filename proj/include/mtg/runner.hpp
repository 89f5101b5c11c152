#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace mtg {

// Options assembled from command-line flags. Flags override their config
// counterparts; unset optionals defer to the config.
struct RunOptions {
  std::string config_path;
  std::string out_dir;                // overrides [output] dir when non-empty
  int threads = 1;
  std::optional<std::uint64_t> seed;  // overrides [verify] seed
  int refine = 0;  // doubles every grid node count this many times
};

// Exit codes: CI-friendly triage.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerification = 4;

// Solve per the config and write value / component CSVs plus meta.json and
// timings.json into the output directory.
int run_solve(const RunOptions& opt, std::ostream& log);

// Solve, run the enabled checks, write report.json. Exit 0 only when every
// check passes or is skipped; violations exit 4.
int run_verify(const RunOptions& opt, std::ostream& log);

// Solve, extract the feedback policy, integrate the sheet from the
// configured start point, write sheet.csv and meta.json with the
// realized-vs-value gap.
int run_synthesize(const RunOptions& opt, std::ostream& log);

// Print the built-in instance catalog.
int run_catalog(std::ostream& out);

}  // namespace mtg
