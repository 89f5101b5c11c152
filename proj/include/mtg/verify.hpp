#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtg/game.hpp"
#include "mtg/grid.hpp"
#include "mtg/hamiltonian.hpp"
#include "mtg/rng.hpp"

namespace mtg {

struct Violation {
  std::string kind;  // "supersolution" | "subsolution" | "dpp" | "ordering"
  MultiIndex time_idx;
  MultiIndex state_idx;
  double magnitude = 0.0;  // measured amount, always > the check's tolerance
};

struct ViolationReport {
  std::vector<Violation> entries;
  double max_magnitude = 0.0;  // max over entries, 0 when empty
  std::size_t tested_count = 0;

  bool ok() const { return entries.empty(); }
  void add(std::string kind, MultiIndex time_idx, MultiIndex state_idx,
           double magnitude);
};

// Backward induction for the single-time-parameter game, written as an
// independent cross-check of the solver: separate march, separate
// interpolation (no node snapping), and the running cost sampled at the
// Euler foot (t_{j+1}, x + X dt) instead of at the departure point.  The
// deliberate quadrature difference keeps solver-vs-oracle distances honest
// first-order quantities.  Throws UnsupportedError when m != 1.
ValueField discrete_game_oracle(const GameInstance& instance,
                                const MultitimeGrid& grid,
                                HamiltonianKind kind = HamiltonianKind::Upper);

// |field - one application of the box DPP operator| at every node, stepping
// box_steps[alpha] nodes per axis.  Entries list nodes whose residual
// exceeds tolerance, with magnitude the residual itself; max_magnitude is
// the largest listed residual.  A field produced by the solver is an exact
// fixpoint at box_steps = 1.
ViolationReport dpp_residual(const ValueField& field,
                             const GameInstance& instance,
                             const std::vector<int>& box_steps,
                             HamiltonianKind kind = HamiltonianKind::Upper,
                             double tolerance = 0.0);

// Scalar quadratic in (t, x); the test field splits it evenly across the m
// components, w^alpha = base / m, matching the solved fields' isotropic
// split.  Derivatives are exact closed forms.
struct QuadraticTest {
  double c0 = 0.0;
  std::vector<double> lin_t, lin_x;    // coefficients of t_alpha, x_i
  std::vector<double> quad_t, quad_x;  // coefficients of t_alpha^2, x_i^2
  std::vector<double> cross;           // t_alpha * x_i, row-major (alpha, i)

  double value(const std::vector<double>& t,
               const std::vector<double>& x) const;
  double dt(int alpha, const std::vector<double>& t,
            const std::vector<double>& x) const;
  double dx(int i, const std::vector<double>& t,
            const std::vector<double>& x) const;
  double scale() const;  // max(1, largest |coefficient|)
};

// All coefficients drawn uniformly from [-1, 1] in a fixed order.
QuadraticTest random_quadratic(int m, int n, Rng& rng);

// Sub/supersolution inequalities through smooth test fields: for each test
// quadratic w, locates grid-local extrema of sum_alpha(field^alpha - w^alpha)
// over nodes interior in every axis (plateau nodes count as extrema).  At a
// local max the subsolution inequality
//   (1/m) sum_alpha dw/dt^alpha + H_plus(t, x, (1/m) dw/dx) >= -tol
// must hold, at a local min the supersolution counterpart <= +tol, with
// tol = 10 * (max time step + max state step) * scale(w).  tested_count is
// the number of inequality evaluations.
ViolationReport viscosity_check(const GeneratingField& field,
                                const GameInstance& instance, int test_family,
                                std::uint64_t rng_seed);
ViolationReport viscosity_check_with(const GeneratingField& field,
                                     const GameInstance& instance,
                                     const std::vector<QuadraticTest>& tests);

struct PayoffDetails {
  std::vector<double> end_state;
  double running_integral = 0.0;
  double terminal_value = 0.0;
  std::uint64_t clamp_events = 0;
};

// Cost of explicitly sampled control paths from a start point: integrates
// the flow along the diagonal staircase of the sub-box [start_t, T],
// trapezoid-integrates the running cost over that whole box under the sheet
// approximation, and adds the terminal cost.  u_traj / v_traj hold one
// control vector per time node of the sub-box, flattened with axis 1 most
// significant.  start_t must lie on grid time nodes.
double payoff_of_controls(const GameInstance& instance,
                          const MultitimeGrid& grid,
                          const std::vector<std::vector<double>>& u_traj,
                          const std::vector<std::vector<double>>& v_traj,
                          const std::vector<double>& start_t,
                          const std::vector<double>& start_x,
                          PayoffDetails* details = nullptr);

struct FieldComparison {
  double sup_norm = 0.0;
  double l2_norm = 0.0;  // sqrt of the unweighted sum of squared differences
  MultiIndex argmax_time, argmax_state;  // first node attaining sup_norm
};

FieldComparison compare_fields(const ValueField& a, const ValueField& b);

// The "remark2" catalog instance conserves F(t) = t1/t2 along its optimal
// controls u_alpha = -t_alpha: checks sum_alpha u_alpha dF/dt^alpha = 0 with
// hand-coded derivatives at random points in [0.5, 2]^2, returning the worst
// absolute residual.
double remark2_constraint_residual(int points, std::uint64_t seed);

}  // namespace mtg
