#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mtg/game.hpp"
#include "mtg/grid.hpp"
#include "mtg/hamiltonian.hpp"

namespace mtg {

// Saddle control indices at every grid node, extracted from a solved field.
// The costate uses the isotropic split p_i^alpha = (1/m) dM/dx^i with the
// gradient taken by central differences (one-sided at the box boundary).
struct FeedbackPolicy {
  MultitimeGrid grid;
  std::vector<int> u_index;  // time-major, one entry per (tflat, sflat)
  std::vector<int> v_index;

  int u_at(std::size_t tflat, std::size_t sflat) const {
    return u_index[tflat * grid.state_count() + sflat];
  }
  int v_at(std::size_t tflat, std::size_t sflat) const {
    return v_index[tflat * grid.state_count() + sflat];
  }
};

struct SheetSample {
  MultiIndex time_idx;
  std::vector<double> time;
  std::vector<double> state;
  std::vector<double> u, v;  // controls chosen at this corner
  // velocity X_alpha(t, x, u, v), one row per time axis; rows of zeros for
  // axes that do not advance from this corner
  std::vector<std::vector<double>> axis_velocity;
  // running-cost quadrature over the box between the start corner and this
  // corner, under the sheet approximation
  double accumulated_cost = 0.0;
};

// Staircase path from a start corner to the terminal corner: every move
// advances all not-yet-maxed time axes by one node (the solver's box step)
// with one explicit Euler update of the state.
struct Sheet {
  std::vector<SheetSample> samples;
  // max state discrepancy from re-integrating a move's box in ascending vs
  // descending axis order with frozen controls; 0 when m == 1
  double compatibility_residual = 0.0;
  std::uint64_t clamp_events = 0;  // policy lookups outside the state box
};

// Open-loop or state-feedback control source: maps (t, x) to a (u, v) pair.
using FeedbackFn = std::function<
    std::pair<std::vector<double>, std::vector<double>>(
        const std::vector<double>& t, const std::vector<double>& x)>;

FeedbackPolicy feedback_controls(const ValueField& field,
                                 const GameInstance& instance,
                                 const MultitimeGrid& grid);

Sheet integrate_flow(const GameInstance& instance, const MultitimeGrid& grid,
                     const FeedbackFn& controls,
                     const MultiIndex& start_time_idx,
                     const std::vector<double>& start_state);

// Policy-driven variant; controls are read at the nearest state node.
Sheet integrate_flow(const GameInstance& instance, const FeedbackPolicy& policy,
                     const MultiIndex& start_time_idx,
                     const MultiIndex& start_state_idx);

std::vector<TrajectorySample> to_trajectory(const Sheet& sheet);

struct RealizedComparison {
  double realized = 0.0;        // sheet cost quadrature + terminal cost
  double value_at_start = 0.0;  // solved field at the start node
  double gap = 0.0;             // |realized - value_at_start|
  Sheet sheet;
};

RealizedComparison realized_vs_value(const GameInstance& instance,
                                     const ValueField& field,
                                     const FeedbackPolicy& policy,
                                     const MultiIndex& start_time_idx,
                                     const MultiIndex& start_state_idx);

}  // namespace mtg
