#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mtg/errors.hpp"

namespace mtg {

// Multi-dimensional node index; time indices have length m, state indices
// length n.
using MultiIndex = std::vector<int>;

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int nodes = 2;

  double step() const {
    return nodes > 1 ? (hi - lo) / static_cast<double>(nodes - 1) : 0.0;
  }
  double coord(int j) const { return lo + step() * static_cast<double>(j); }
};

// Tensor product of m uniform time axes and n uniform state axes.  Immutable
// once constructed.  Flat orderings put axis 0 in the most significant
// position, so ascending flat order is ascending lexicographic order.
class MultitimeGrid {
 public:
  MultitimeGrid(std::vector<Axis> time_axes, std::vector<Axis> state_axes);

  int m() const { return static_cast<int>(time_.size()); }
  int n() const { return static_cast<int>(state_.size()); }
  const Axis& time_axis(int a) const { return time_[static_cast<std::size_t>(a)]; }
  const Axis& state_axis(int i) const { return state_[static_cast<std::size_t>(i)]; }
  const std::vector<Axis>& time_axes() const { return time_; }
  const std::vector<Axis>& state_axes() const { return state_; }

  std::size_t time_count() const { return time_count_; }
  std::size_t state_count() const { return state_count_; }
  std::size_t node_count() const { return time_count_ * state_count_; }

  std::size_t time_flat(const MultiIndex& j) const;
  std::size_t state_flat(const MultiIndex& k) const;
  MultiIndex time_unflat(std::size_t flat) const;
  MultiIndex state_unflat(std::size_t flat) const;

  std::vector<double> time_coords(const MultiIndex& j) const;
  std::vector<double> state_coords(const MultiIndex& k) const;

  // Index with every time axis at its last node.
  MultiIndex terminal_index() const;
  bool is_terminal(const MultiIndex& j) const;

  // Refinement helpers: halving the step keeps the span and maps old nodes
  // onto even new ones (N -> 2N-1); doubling the node count changes the step
  // by slightly less than half (N -> 2N).
  MultitimeGrid with_steps_halved() const;
  MultitimeGrid with_nodes_doubled() const;

 private:
  std::vector<Axis> time_;
  std::vector<Axis> state_;
  std::size_t time_count_ = 1;
  std::size_t state_count_ = 1;
};

// True when both grids have identical axes (bounds and node counts).
bool same_layout(const MultitimeGrid& a, const MultitimeGrid& b);

// Scalar samples on every grid node, stored time-major:
// data[time_flat * state_count + state_flat].
class ValueField {
 public:
  ValueField(MultitimeGrid grid, std::string name);

  const MultitimeGrid& grid() const { return grid_; }
  const std::string& name() const { return name_; }

  double at(std::size_t tflat, std::size_t sflat) const {
    return data_[tflat * grid_.state_count() + sflat];
  }
  double& at(std::size_t tflat, std::size_t sflat) {
    return data_[tflat * grid_.state_count() + sflat];
  }

  std::span<const double> state_slab(std::size_t tflat) const;
  std::span<double> state_slab(std::size_t tflat);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const;

 private:
  MultitimeGrid grid_;
  std::string name_;
  std::vector<double> data_;
};

// One scalar per grid node per time axis (components indexed by alpha).
class GeneratingField {
 public:
  GeneratingField(MultitimeGrid grid, std::string name);

  const MultitimeGrid& grid() const { return grid_; }
  const std::string& name() const { return name_; }

  const std::string& terminal_note() const { return terminal_note_; }
  void set_terminal_note(std::string note) { terminal_note_ = std::move(note); }

  double at(int alpha, std::size_t tflat, std::size_t sflat) const {
    return comps_[static_cast<std::size_t>(alpha)][tflat * grid_.state_count() + sflat];
  }
  double& at(int alpha, std::size_t tflat, std::size_t sflat) {
    return comps_[static_cast<std::size_t>(alpha)][tflat * grid_.state_count() + sflat];
  }

  std::span<const double> state_slab(int alpha, std::size_t tflat) const;
  std::span<double> state_slab(int alpha, std::size_t tflat);

  const std::vector<double>& component(int alpha) const {
    return comps_[static_cast<std::size_t>(alpha)];
  }
  std::vector<double>& component(int alpha) {
    return comps_[static_cast<std::size_t>(alpha)];
  }

  bool all_finite() const;

 private:
  MultitimeGrid grid_;
  std::string name_;
  std::string terminal_note_;
  std::vector<std::vector<double>> comps_;
};

enum class GradScheme { Central, Upwind };

// Finite-difference gradient in the state variables at a grid node.
// Central requires the node to be interior along every state axis.  Upwind
// takes one optional sign per state axis: sign >= 0 selects the forward
// difference, sign < 0 the backward one; at a boundary the available side is
// used regardless of sign.
std::vector<double> spatial_gradient(const ValueField& field, std::size_t tflat,
                                     const MultiIndex& k, GradScheme scheme,
                                     const std::vector<double>& upwind_signs = {});
std::vector<std::vector<double>> spatial_gradient(const GeneratingField& field,
                                                  std::size_t tflat,
                                                  const MultiIndex& k,
                                                  GradScheme scheme,
                                                  const std::vector<double>& upwind_signs = {});

// Convenience built on the two schemes: central where the node is interior,
// one-sided on the boundary.  Defined for any node.
std::vector<double> node_gradient(const ValueField& field, std::size_t tflat,
                                  const MultiIndex& k);

// Trapezoidal quadrature of a node-sampled integrand over the time box
// [corner_lo, corner_hi].  Returns 0 when any edge of the box is degenerate.
double box_integral(const MultitimeGrid& grid, const MultiIndex& corner_lo,
                    const MultiIndex& corner_hi,
                    const std::function<double(const MultiIndex&)>& value_at);

// Partition of all time multi-indices into levels of equal index sum, ordered
// by decreasing sum (terminal corner first) and lexicographically within each
// level.  Every index's forward neighbors (+1 on any subset of axes) lie in a
// strictly earlier level, so walking the levels in order is a valid backward
// march.
std::vector<std::vector<MultiIndex>> antidiagonal_levels(const MultitimeGrid& grid);

// Cell location of a coordinate on one axis, as used by the multilinear
// interpolation: queries clamp to [lo, hi] and fractions within rounding
// noise of a node snap onto it.
struct AxisQuery {
  int cell = 0;
  double frac = 0.0;
  bool clamped = false;
};

AxisQuery locate_on_axis(const Axis& axis, double x);

// Multilinear interpolation over the state axes of a single time slab.
// Queries outside the state box clamp to the boundary; each clamped query
// increments *clamp_events once (pass nullptr to ignore).
double interpolate_state(const MultitimeGrid& grid, std::span<const double> slab,
                         const std::vector<double>& x,
                         std::uint64_t* clamp_events);
double interpolate_state(const ValueField& field, std::size_t tflat,
                         const std::vector<double>& x,
                         std::uint64_t* clamp_events);
double interpolate_component(const GeneratingField& field, int alpha,
                             std::size_t tflat, const std::vector<double>& x,
                             std::uint64_t* clamp_events);

// One sample of a staircase trajectory: the time node it sits on, the state
// there, and the recorded per-axis state velocities dx^i/ds^alpha (m rows of
// n entries).
struct TrajectorySample {
  MultiIndex time_idx;
  std::vector<double> state;
  std::vector<std::vector<double>> axis_velocity;
};

struct DivergenceResult {
  // |sum_a F^a(end) - sum_a F^a(start) - integral of the total divergence|.
  double residual = 0.0;
  // The same quantity with its sign, i.e. the constant that would make the
  // identity exact.
  double signed_value = 0.0;
};

// Checks the divergence identity for a generating field along a staircase
// trajectory: the increment of sum_alpha F^alpha between the path endpoints
// must match the box integral of sum_alpha (d/dt^alpha + velocity . d/dx)
// F^alpha, with the hyperbolic constant fixed to zero.  Field derivatives are
// finite differences; states along the box come from the staircase samples.
DivergenceResult divergence_residual(const GeneratingField& field,
                                     const MultiIndex& path_start,
                                     const MultiIndex& path_end,
                                     const std::vector<TrajectorySample>& path);

}  // namespace mtg
