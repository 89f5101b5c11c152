#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtg/game.hpp"
#include "mtg/grid.hpp"
#include "mtg/hamiltonian.hpp"

namespace mtg {

enum class SolveWhich { Upper, Lower, Both };

struct SolverOptions {
  std::string scheme = "semi_lagrangian";  // the only implemented scheme
  SolveWhich which = SolveWhich::Both;     // consumed by the run drivers
  bool clamp = true;   // false: abort with GridError instead of clamping feet
  int refinement = 0;  // number of step halvings applied before solving
  int threads = 1;
};

struct SolveResult {
  ValueField value;
  GeneratingField components;  // isotropic split: component alpha = value / m
  std::uint64_t clamp_events = 0;
  std::vector<double> level_seconds;  // wall time per antidiagonal level
};

// Terminal data for the generating field: component alpha at the terminal
// corner carries g(x)/m; all other entries are zero.
GeneratingField terminal_fill(const GameInstance& instance,
                              const MultitimeGrid& grid);

// Backward semi-Lagrangian march over the antidiagonal levels.  At each node
// the box steps one node on every non-maxed time axis (axes at their last
// node contribute a zero edge, so no running cost accrues on those faces) and
// the update takes min over v of max over u of
//   L * vol(h) + Interp(value at t+h, x + sum_alpha X_alpha h^alpha).
// solve_lower swaps the optimization order.  Throws NumericError naming the
// node if an update goes non-finite.
SolveResult solve_upper(const GameInstance& instance, const MultitimeGrid& grid,
                        const SolverOptions& options = {});
SolveResult solve_lower(const GameInstance& instance, const MultitimeGrid& grid,
                        const SolverOptions& options = {});

// One application of the DPP operator to an existing field at node
// (time_idx, state_idx) over the box stepping up to box_steps[alpha] nodes on
// time axis alpha (clamped to the nodes remaining).  kind selects min-max
// (Upper) or max-min (Lower).  The solver's own updates are exactly this with
// box_steps = 1 on every axis, so a solved field is a fixpoint of this
// function.  Clamped feet are counted, never rejected.
double dpp_box_value(const ValueField& field, const GameInstance& instance,
                     const MultiIndex& time_idx, const MultiIndex& state_idx,
                     const std::vector<int>& box_steps, HamiltonianKind kind,
                     std::uint64_t* clamp_events);
// Same step count on every axis.
double dpp_box_value(const ValueField& field, const GameInstance& instance,
                     const MultiIndex& time_idx, const MultiIndex& state_idx,
                     int box_steps, HamiltonianKind kind,
                     std::uint64_t* clamp_events);

}  // namespace mtg
