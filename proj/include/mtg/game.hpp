#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mtg/errors.hpp"
#include "mtg/expr.hpp"

// Game instances for two-team games driven by a multi-axis evolution
// parameter: dynamics X_alpha^i(t,x,u,v), running cost L, terminal cost g,
// and finite sampled control sets.  Convention throughout: u maximizes the
// payoff, v minimizes it.

namespace mtg {

// A compact control set realized as a finite, deterministic sample list.
struct ControlBoxSpec {
  std::vector<std::array<double, 2>> bounds;  // per coordinate [lo, hi]
  int samples_per_axis = 1;
};

struct ControlPointsSpec {
  std::vector<std::vector<double>> points;
};

using ControlSetSpec = std::variant<ControlBoxSpec, ControlPointsSpec>;

class ControlSet {
 public:
  ControlSet() = default;

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<double>& point(std::size_t i) const { return points_[i]; }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const ControlSetSpec& spec() const { return spec_; }

  // For a box spec, halves the sample spacing (k -> 2k-1); explicit point
  // lists are returned unchanged.
  ControlSet with_spacing_halved() const;

 private:
  friend ControlSet sample_control_set(const ControlSetSpec& spec);

  int dim_ = 0;
  std::vector<std::vector<double>> points_;
  ControlSetSpec spec_;
};

// Realizes a spec as sample points.  Boxes enumerate lexicographically by
// axis index, endpoints included for k >= 2, midpoint for k == 1; exact
// duplicate points are removed keeping the first occurrence.  A
// zero-dimensional set is one empty point, so min/max loops always have at
// least one iterate.  Throws InvalidSpecError for lo > hi, k < 1, or an
// empty explicit list.
ControlSet sample_control_set(const ControlSetSpec& spec);

// Closed-form facts attached to benchmark instances.
struct BenchmarkInfo {
  std::optional<double> value;             // value at every (t,x), when known
  std::optional<double> hamiltonian_gap;   // upper-lower gap at p = 0
  std::string note;
};

struct GameInstance {
  std::string name = "custom";
  int m = 1;  // time axes
  int n = 1;  // state dimension
  int p = 1;  // u-control dimension (maximizer)
  int q = 1;  // v-control dimension (minimizer)
  std::vector<double> horizon;          // size m, far corner of the time box
  std::vector<expr::Expression> dynamics;  // m*n entries, (alpha,i) at alpha*n+i
  expr::Expression running_cost;        // L(t,x,u,v)
  expr::Expression terminal_cost;       // g(x)
  ControlSet u_set, v_set;
  BenchmarkInfo benchmark;

  // Filled by finalize():
  expr::VarLayout layout;  // t1..tm, x1..xn, u1..up, v1..vq
  std::vector<expr::CompiledExpr> dynamics_c;
  expr::CompiledExpr running_cost_c, terminal_cost_c;

  const expr::Expression& dynamic(int alpha, int i) const {
    return dynamics[static_cast<std::size_t>(alpha * n + i)];
  }
  const expr::CompiledExpr& dynamic_c(int alpha, int i) const {
    return dynamics_c[static_cast<std::size_t>(alpha * n + i)];
  }
  int env_size() const { return m + n + p + q; }
  int t_slot() const { return 0; }
  int x_slot() const { return m; }
  int u_slot() const { return m + n; }
  int v_slot() const { return m + n + p; }

  // Validates dimensions, horizon positivity, variable legality (dynamics
  // and L over t/x/u/v, g over x only) and compiles every expression.
  // Throws InvalidSpecError on violations.
  void finalize();
};

// Built-in benchmark catalog.  `k` is the per-axis sample count used for
// box-shaped control sets (explicit lists are fixed).  Throws
// InvalidSpecError for an unknown name or m < 1.
//
//   remark1          n=1: L=(x1+v1)^2-u1^2, X_alpha=u1+v1, g=0,
//                    U=[-1,1], V=[-2,2]; value 0 with saddle u=0, v=-x1.
//   remark2          control-only: L=sum_a (t^a+u^a)^2, no v, X=0, g=0,
//                    U=[-1,0]^m; payoff 0 at u_a(t)=-t^a.
//   bilinear_gap     L=u1*v1, X=0, g=0, U={-1,0,1}, V={-1,1}; the upper and
//                    lower Hamiltonians differ by exactly 1 at p=0.
//   separable_isaacs L=v1^2-u1^2+x1^2, X_alpha=u1-v1, g=x1^2, U=V=[-1,1];
//                    min-max equals max-min (zero gap).
GameInstance catalog_instance(const std::string& name, int m, int k = 21);

// Names accepted by catalog_instance, in catalog order.
const std::vector<std::string>& catalog_names();

// Copy of `g` with both box control sets re-sampled at halved spacing.
GameInstance with_control_spacing_halved(const GameInstance& g);

// Copy of `g` with `c` added to the running cost (for shift tests).
GameInstance with_running_cost_offset(const GameInstance& g, double c);

// Copy of `g` with `c` added to the terminal cost.
GameInstance with_terminal_cost_offset(const GameInstance& g, double c);

// All-zero game (L=0, X=0, g=0) with 1-point control sets; handy baseline.
GameInstance make_zero_game(int m, int n = 1);

}  // namespace mtg
