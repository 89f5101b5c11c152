#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mtg/solver.hpp"
#include "mtg/synthesis.hpp"

using namespace mtg;

namespace {

MultitimeGrid make_grid(const GameInstance& g, int time_nodes, double xlo,
                        double xhi, int state_nodes) {
  std::vector<Axis> ta, sa;
  for (int a = 0; a < g.m; ++a)
    ta.push_back(Axis{0.0, g.horizon[static_cast<std::size_t>(a)], time_nodes});
  for (int i = 0; i < g.n; ++i) sa.push_back(Axis{xlo, xhi, state_nodes});
  return MultitimeGrid(std::move(ta), std::move(sa));
}

FeedbackFn constant_controls(std::vector<double> u, std::vector<double> v) {
  return [u = std::move(u), v = std::move(v)](const std::vector<double>&,
                                              const std::vector<double>&) {
    return std::make_pair(u, v);
  };
}

}  // namespace

TEST_CASE("zero game policy picks the first samples everywhere") {
  GameInstance g = make_zero_game(1);
  MultitimeGrid grid = make_grid(g, 4, -1.0, 1.0, 5);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  for (int idx : policy.u_index) CHECK(idx == 0);
  for (int idx : policy.v_index) CHECK(idx == 0);
}

TEST_CASE("first benchmark policy tracks the saddle within a sample spacing") {
  GameInstance g = catalog_instance("remark1", 1, 21);
  MultitimeGrid grid = make_grid(g, 26, -1.0, 1.0, 41);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  const double du = 0.1;  // u samples: 21 over [-1,1]
  const double dv = 0.2;  // v samples: 21 over [-2,2]
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf)
    for (int k = 1; k + 1 < grid.state_axis(0).nodes; ++k) {
      const double x = grid.state_axis(0).coord(k);
      const std::size_t sf = static_cast<std::size_t>(k);
      const double ustar =
          g.u_set.point(static_cast<std::size_t>(policy.u_at(tf, sf)))[0];
      const double vstar =
          g.v_set.point(static_cast<std::size_t>(policy.v_at(tf, sf)))[0];
      CHECK(std::abs(ustar) <= du + 1e-12);
      CHECK(std::abs(vstar + x) <= dv + 1e-12);
    }
}

TEST_CASE("gap game policy realizes the upper saddle product") {
  GameInstance g = catalog_instance("bilinear_gap", 1);
  MultitimeGrid grid = make_grid(g, 5, -1.0, 1.0, 5);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf)
    for (std::size_t k = 0; k < grid.state_count(); ++k) {
      const double u =
          g.u_set.point(static_cast<std::size_t>(policy.u_at(tf, k)))[0];
      const double v =
          g.v_set.point(static_cast<std::size_t>(policy.v_at(tf, k)))[0];
      CHECK(u * v == 1.0);
    }
}

TEST_CASE("zero dynamics give a constant sheet with zero residual") {
  GameInstance g = make_zero_game(2);
  MultitimeGrid grid = make_grid(g, 5, -1.0, 1.0, 5);
  Sheet s = integrate_flow(g, grid, constant_controls({0.0}, {0.0}),
                           MultiIndex{0, 0}, {0.5});
  CHECK(s.samples.size() == 5);
  for (const auto& sample : s.samples) {
    CHECK(sample.state == std::vector<double>{0.5});
    CHECK(sample.accumulated_cost == 0.0);
  }
  CHECK(s.compatibility_residual == 0.0);
  CHECK(s.clamp_events == 0);
  CHECK(s.samples.back().time_idx == MultiIndex{4, 4});
}

TEST_CASE("saddle feedback reproduces the two-parameter exponential decay") {
  GameInstance g = catalog_instance("remark1", 2, 21);
  MultitimeGrid grid = make_grid(g, 50, -1.0, 1.0, 41);
  const FeedbackFn saddle = [](const std::vector<double>&,
                               const std::vector<double>& x) {
    return std::make_pair(std::vector<double>{0.0},
                          std::vector<double>{-x[0]});
  };
  Sheet s = integrate_flow(g, grid, saddle, MultiIndex{0, 0}, {1.0});
  // dx = -x (ds1 + ds2) from x(0) = 1 ends at e^{-2}
  const double end = s.samples.back().state[0];
  CHECK(std::abs(end - std::exp(-2.0)) <= 5e-2);
  // both axes share the same dynamics, so the box sweeps commute
  CHECK(s.compatibility_residual <= 1e-12);
  CHECK(s.samples.size() == 50);
}

TEST_CASE("constant running cost accumulates the box volume") {
  GameInstance g = make_zero_game(2);
  g.running_cost = expr::parse("1");
  g.finalize();
  MultitimeGrid grid = make_grid(g, 6, -1.0, 1.0, 3);
  Sheet s = integrate_flow(g, grid, constant_controls({0.0}, {0.0}),
                           MultiIndex{0, 0}, {0.0});
  // accumulated cost at corner k is the area of the sub-box [0, t_k]^2
  for (std::size_t k = 0; k < s.samples.size(); ++k) {
    const double t = s.samples[k].time[0];
    CHECK(s.samples[k].accumulated_cost == doctest::Approx(t * t).epsilon(1e-12));
  }
  CHECK(s.samples.back().accumulated_cost == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("realized payoff matches the value for constant cost") {
  GameInstance g = make_zero_game(1);
  g.running_cost = expr::parse("1");
  g.finalize();
  MultitimeGrid grid = make_grid(g, 8, -1.0, 1.0, 5);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  RealizedComparison rc = realized_vs_value(g, r.value, policy, {0}, {2});
  CHECK(rc.realized == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rc.value_at_start == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rc.gap <= 1e-9);

  GameInstance z = make_zero_game(1);
  MultitimeGrid zg = make_grid(z, 4, -1.0, 1.0, 5);
  SolveResult zr = solve_upper(z, zg);
  RealizedComparison zc =
      realized_vs_value(z, zr.value, feedback_controls(zr.value, z, zg), {0}, {2});
  CHECK(zc.gap == 0.0);
}

TEST_CASE("first benchmark sheet stays close to the computed value") {
  GameInstance g = catalog_instance("remark1", 1, 21);
  MultitimeGrid grid = make_grid(g, 50, -1.0, 1.0, 41);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  // start at x = 0.5 (node 30 of 41 on [-1, 1])
  RealizedComparison rc = realized_vs_value(g, r.value, policy, {0}, {30});
  CHECK(rc.gap <= 1e-1);
}

TEST_CASE("staircase handles unequal remaining axis counts") {
  GameInstance g = make_zero_game(2);
  g.dynamics[0] = expr::parse("1");
  g.dynamics[1] = expr::parse("1");
  g.finalize();
  MultitimeGrid grid = make_grid(g, 4, -10.0, 10.0, 5);
  Sheet s = integrate_flow(g, grid, constant_controls({0.0}, {0.0}),
                           MultiIndex{2, 0}, {0.0});
  // axis 1 maxes after one move; axis 2 keeps going alone
  CHECK(s.samples.size() == 4);
  CHECK(s.samples[0].time_idx == MultiIndex{2, 0});
  CHECK(s.samples[1].time_idx == MultiIndex{3, 1});
  CHECK(s.samples[2].time_idx == MultiIndex{3, 2});
  CHECK(s.samples.back().time_idx == MultiIndex{3, 3});
  int prev_sum = -1;
  for (const auto& sample : s.samples) {
    const int sum = sample.time_idx[0] + sample.time_idx[1];
    CHECK(sum > prev_sum);
    prev_sum = sum;
  }
  // each advancing axis adds step 1/3 per move; stopped axis contributes 0
  CHECK(s.samples[1].state[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.samples[2].state[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("policy lookups outside the box are clamped and counted") {
  GameInstance g = make_zero_game(1);
  g.dynamics[0] = expr::parse("10");
  g.finalize();
  MultitimeGrid grid = make_grid(g, 4, 0.0, 1.0, 5);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  Sheet s = integrate_flow(g, policy, {0}, {4});  // starts at x = 1, flies off
  CHECK(s.clamp_events > 0);
  CHECK(s.samples.back().state[0] > 1.0);  // state itself is not clamped
}

TEST_CASE("policies and sheets are deterministic") {
  GameInstance g = catalog_instance("separable_isaacs", 2, 5);
  MultitimeGrid grid = make_grid(g, 4, -1.0, 1.0, 7);
  SolveResult r = solve_upper(g, grid);
  FeedbackPolicy a = feedback_controls(r.value, g, grid);
  FeedbackPolicy b = feedback_controls(r.value, g, grid);
  CHECK(a.u_index == b.u_index);
  CHECK(a.v_index == b.v_index);
  Sheet sa = integrate_flow(g, a, {0, 0}, {3});
  Sheet sb = integrate_flow(g, b, {0, 0}, {3});
  REQUIRE(sa.samples.size() == sb.samples.size());
  for (std::size_t i = 0; i < sa.samples.size(); ++i) {
    CHECK(sa.samples[i].state == sb.samples[i].state);
    CHECK(sa.samples[i].accumulated_cost == sb.samples[i].accumulated_cost);
  }
}

TEST_CASE("sheets convert to divergence-ready trajectories") {
  GameInstance g = make_zero_game(2);
  MultitimeGrid grid = make_grid(g, 3, -1.0, 1.0, 3);
  Sheet s = integrate_flow(g, grid, constant_controls({0.0}, {0.0}),
                           MultiIndex{0, 0}, {0.0});
  const auto traj = to_trajectory(s);
  REQUIRE(traj.size() == s.samples.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj[i].time_idx == s.samples[i].time_idx);
    CHECK(traj[i].state == s.samples[i].state);
    CHECK(traj[i].axis_velocity.size() == 2);
  }
}

TEST_CASE("synthesis input validation") {
  GameInstance g = make_zero_game(1);
  MultitimeGrid grid = make_grid(g, 3, -1.0, 1.0, 5);
  MultitimeGrid other = make_grid(g, 4, -1.0, 1.0, 5);
  SolveResult r = solve_upper(g, grid);
  CHECK_THROWS_AS(feedback_controls(r.value, g, other), GridError);

  CHECK_THROWS_AS(integrate_flow(g, grid, constant_controls({0.0}, {0.0}),
                                 MultiIndex{7}, {0.0}),
                  GridError);
  CHECK_THROWS_AS(integrate_flow(g, grid, constant_controls({0.0}, {0.0}),
                                 MultiIndex{0}, {0.0, 0.0}),
                  InvalidSpecError);
  CHECK_THROWS_AS(
      integrate_flow(g, grid, constant_controls({0.0, 0.0}, {0.0}),
                     MultiIndex{0}, {0.0}),
      InvalidSpecError);

  FeedbackPolicy policy = feedback_controls(r.value, g, grid);
  SolveResult other_r = solve_upper(g, other);
  CHECK_THROWS_AS(realized_vs_value(g, other_r.value, policy, {0}, {0}),
                  GridError);
}
