#include "mtg/synthesis.hpp"

#include <algorithm>
#include <cmath>

namespace mtg {
namespace {

void check_instance(const GameInstance& g, const MultitimeGrid& grid) {
  if (g.running_cost_c.empty())
    throw InvalidSpecError("game instance must be finalized");
  if (grid.m() != g.m || grid.n() != g.n)
    throw InvalidSpecError("grid dimensions do not match the instance");
}

void bind_env(std::vector<double>& env, const GameInstance& g,
              const std::vector<double>& t, const std::vector<double>& x,
              const std::vector<double>& u, const std::vector<double>& v) {
  for (int a = 0; a < g.m; ++a)
    env[static_cast<std::size_t>(g.t_slot() + a)] = t[static_cast<std::size_t>(a)];
  for (int i = 0; i < g.n; ++i)
    env[static_cast<std::size_t>(g.x_slot() + i)] = x[static_cast<std::size_t>(i)];
  for (std::size_t c = 0; c < u.size(); ++c)
    env[static_cast<std::size_t>(g.u_slot()) + c] = u[c];
  for (std::size_t c = 0; c < v.size(); ++c)
    env[static_cast<std::size_t>(g.v_slot()) + c] = v[c];
}

// Running-cost quadrature over [start, corner] for every staircase corner.
// The sheet approximation maps a tensor time node to the staircase sample
// whose diagonal progress it is behind: min over initially-moving axes of
// the relative index.
void fill_accumulated_costs(const GameInstance& g, const MultitimeGrid& grid,
                            const MultiIndex& start, Sheet& sheet) {
  const int m = g.m;
  std::vector<int> moving;
  for (int a = 0; a < m; ++a)
    if (start[a] < grid.time_axis(a).nodes - 1) moving.push_back(a);
  if (moving.empty()) return;

  std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
  const auto value_at = [&](const MultiIndex& jj) {
    int sidx = grid.time_axis(moving[0]).nodes;  // any large bound works
    for (int a : moving) sidx = std::min(sidx, jj[a] - start[a]);
    const SheetSample& sp = sheet.samples[static_cast<std::size_t>(sidx)];
    const std::vector<double> tt = grid.time_coords(jj);
    bind_env(env, g, tt, sp.state, sp.u, sp.v);
    return g.running_cost_c.eval(env);
  };
  for (std::size_t k = 1; k < sheet.samples.size(); ++k)
    sheet.samples[k].accumulated_cost =
        box_integral(grid, start, sheet.samples[k].time_idx, value_at);
}

Sheet integrate_core(const GameInstance& g, const MultitimeGrid& grid,
                     const FeedbackFn& pick, const MultiIndex& start_time_idx,
                     const std::vector<double>& start_state) {
  check_instance(g, grid);
  grid.time_flat(start_time_idx);  // bounds check
  if (start_state.size() != static_cast<std::size_t>(g.n))
    throw InvalidSpecError("start state has wrong dimension");

  const int m = g.m;
  const int n = g.n;
  Sheet sheet;
  MultiIndex j = start_time_idx;
  std::vector<double> x = start_state;
  std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
  double residual = 0.0;

  for (;;) {
    const std::vector<double> t = grid.time_coords(j);
    auto [u, v] = pick(t, x);
    if (static_cast<int>(u.size()) != g.u_set.dim() ||
        static_cast<int>(v.size()) != g.v_set.dim())
      throw InvalidSpecError("feedback returned controls of wrong dimension");

    std::vector<int> moving;
    for (int a = 0; a < m; ++a)
      if (j[a] < grid.time_axis(a).nodes - 1) moving.push_back(a);

    SheetSample s;
    s.time_idx = j;
    s.time = t;
    s.state = x;
    s.u = u;
    s.v = v;
    s.axis_velocity.assign(static_cast<std::size_t>(m),
                           std::vector<double>(static_cast<std::size_t>(n), 0.0));
    bind_env(env, g, t, x, u, v);
    for (int a : moving)
      for (int i = 0; i < n; ++i) {
        const double vel = g.dynamic_c(a, i).eval(env);
        if (!std::isfinite(vel))
          throw NumericError("non-finite dynamics along the sheet");
        s.axis_velocity[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = vel;
      }
    sheet.samples.push_back(s);
    if (moving.empty()) break;

    // integrability probe: sweep the same box axis-by-axis in both orders
    // with the controls frozen at this corner
    if (moving.size() >= 2) {
      std::vector<double> swept[2];
      for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> y = x;
        std::vector<double> tt = t;
        std::vector<int> order = moving;
        if (pass == 1) std::reverse(order.begin(), order.end());
        for (int a : order) {
          bind_env(env, g, tt, y, u, v);
          const double dt = grid.time_axis(a).step();
          std::vector<double> dy(static_cast<std::size_t>(n), 0.0);
          for (int i = 0; i < n; ++i)
            dy[static_cast<std::size_t>(i)] = g.dynamic_c(a, i).eval(env) * dt;
          for (int i = 0; i < n; ++i)
            y[static_cast<std::size_t>(i)] += dy[static_cast<std::size_t>(i)];
          tt[static_cast<std::size_t>(a)] += dt;
        }
        swept[pass] = std::move(y);
      }
      for (int i = 0; i < n; ++i)
        residual = std::max(residual,
                            std::abs(swept[0][static_cast<std::size_t>(i)] -
                                     swept[1][static_cast<std::size_t>(i)]));
    }

    for (int a : moving) {
      const double dt = grid.time_axis(a).step();
      for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] +=
            s.axis_velocity[static_cast<std::size_t>(a)]
                           [static_cast<std::size_t>(i)] * dt;
    }
    for (int a : moving) ++j[a];
  }

  sheet.compatibility_residual = residual;
  fill_accumulated_costs(g, grid, start_time_idx, sheet);
  return sheet;
}

}  // namespace

FeedbackPolicy feedback_controls(const ValueField& field,
                                 const GameInstance& instance,
                                 const MultitimeGrid& grid) {
  check_instance(instance, grid);
  if (!same_layout(field.grid(), grid))
    throw GridError("policy grid does not match the field's grid");

  FeedbackPolicy policy{grid, {}, {}};
  const std::size_t count = grid.time_count() * grid.state_count();
  policy.u_index.resize(count);
  policy.v_index.resize(count);

  HamiltonianEvaluator eval(instance);
  const double md = static_cast<double>(instance.m);
  std::vector<std::vector<double>> p(
      static_cast<std::size_t>(instance.m),
      std::vector<double>(static_cast<std::size_t>(instance.n), 0.0));
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf) {
    const MultiIndex j = grid.time_unflat(tf);
    const std::vector<double> t = grid.time_coords(j);
    for (std::size_t k = 0; k < grid.state_count(); ++k) {
      const MultiIndex ki = grid.state_unflat(k);
      const std::vector<double> x = grid.state_coords(ki);
      const std::vector<double> grad = node_gradient(field, tf, ki);
      for (int a = 0; a < instance.m; ++a)
        for (int i = 0; i < instance.n; ++i)
          p[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] =
              grad[static_cast<std::size_t>(i)] / md;
      const SaddleResult s = eval.saddle(HamiltonianKind::Upper, t, x, p);
      policy.u_index[tf * grid.state_count() + k] = static_cast<int>(s.u_index);
      policy.v_index[tf * grid.state_count() + k] = static_cast<int>(s.v_index);
    }
  }
  return policy;
}

Sheet integrate_flow(const GameInstance& instance, const MultitimeGrid& grid,
                     const FeedbackFn& controls,
                     const MultiIndex& start_time_idx,
                     const std::vector<double>& start_state) {
  return integrate_core(instance, grid, controls, start_time_idx, start_state);
}

Sheet integrate_flow(const GameInstance& instance, const FeedbackPolicy& policy,
                     const MultiIndex& start_time_idx,
                     const MultiIndex& start_state_idx) {
  const MultitimeGrid& grid = policy.grid;
  std::uint64_t clamps = 0;
  MultiIndex nearest(static_cast<std::size_t>(grid.n()), 0);
  const FeedbackFn pick = [&](const std::vector<double>& t,
                              const std::vector<double>& x) {
    MultiIndex j(static_cast<std::size_t>(grid.m()), 0);
    for (int a = 0; a < grid.m(); ++a) {
      const Axis& ax = grid.time_axis(a);
      int idx = static_cast<int>(
          std::lround((t[static_cast<std::size_t>(a)] - ax.lo) / ax.step()));
      idx = std::clamp(idx, 0, ax.nodes - 1);
      j[a] = idx;
    }
    bool clamped = false;
    for (int i = 0; i < grid.n(); ++i) {
      const AxisQuery q =
          locate_on_axis(grid.state_axis(i), x[static_cast<std::size_t>(i)]);
      nearest[i] = q.frac <= 0.5 ? q.cell : q.cell + 1;
      if (q.clamped) clamped = true;
    }
    if (clamped) ++clamps;
    const std::size_t tf = grid.time_flat(j);
    const std::size_t sf = grid.state_flat(nearest);
    return std::make_pair(instance.u_set.point(
                              static_cast<std::size_t>(policy.u_at(tf, sf))),
                          instance.v_set.point(
                              static_cast<std::size_t>(policy.v_at(tf, sf))));
  };
  Sheet sheet = integrate_core(instance, grid, pick, start_time_idx,
                               grid.state_coords(start_state_idx));
  sheet.clamp_events = clamps;
  return sheet;
}

std::vector<TrajectorySample> to_trajectory(const Sheet& sheet) {
  std::vector<TrajectorySample> out;
  out.reserve(sheet.samples.size());
  for (const SheetSample& s : sheet.samples)
    out.push_back(TrajectorySample{s.time_idx, s.state, s.axis_velocity});
  return out;
}

RealizedComparison realized_vs_value(const GameInstance& instance,
                                     const ValueField& field,
                                     const FeedbackPolicy& policy,
                                     const MultiIndex& start_time_idx,
                                     const MultiIndex& start_state_idx) {
  if (!same_layout(field.grid(), policy.grid))
    throw GridError("field and policy grids differ");
  RealizedComparison rc;
  rc.sheet = integrate_flow(instance, policy, start_time_idx, start_state_idx);

  const SheetSample& last = rc.sheet.samples.back();
  std::vector<double> env(static_cast<std::size_t>(instance.env_size()), 0.0);
  for (int i = 0; i < instance.n; ++i)
    env[static_cast<std::size_t>(instance.x_slot() + i)] =
        last.state[static_cast<std::size_t>(i)];
  const double terminal = instance.terminal_cost_c.eval(env);
  if (!std::isfinite(terminal))
    throw NumericError("non-finite terminal cost at the sheet endpoint");

  rc.realized = last.accumulated_cost + terminal;
  rc.value_at_start = field.at(field.grid().time_flat(start_time_idx),
                               field.grid().state_flat(start_state_idx));
  rc.gap = std::abs(rc.realized - rc.value_at_start);
  return rc;
}

}  // namespace mtg
