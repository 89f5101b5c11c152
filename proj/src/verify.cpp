#include "mtg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "mtg/solver.hpp"
#include "mtg/synthesis.hpp"

namespace mtg {
namespace {

void check_pair(const GameInstance& g, const MultitimeGrid& grid) {
  if (g.running_cost_c.empty())
    throw InvalidSpecError("game instance must be finalized");
  if (grid.m() != g.m || grid.n() != g.n)
    throw InvalidSpecError("grid dimensions do not match the instance");
}

// Interpolation private to the oracle: straight multilinear blend with
// clamping at the box edges and no snap-to-node shortcut.
double oracle_interp(const MultitimeGrid& grid, std::span<const double> slab,
                     const std::vector<double>& xq) {
  const int n = grid.n();
  std::vector<int> cell(static_cast<std::size_t>(n), 0);
  std::vector<double> frac(static_cast<std::size_t>(n), 0.0);
  std::vector<std::size_t> stride(static_cast<std::size_t>(n), 1);
  std::size_t s = 1;
  for (int i = n - 1; i >= 0; --i) {
    stride[static_cast<std::size_t>(i)] = s;
    s *= static_cast<std::size_t>(grid.state_axis(i).nodes);
  }
  for (int i = 0; i < n; ++i) {
    const Axis& ax = grid.state_axis(i);
    if (ax.nodes < 2) continue;
    const double u = (xq[static_cast<std::size_t>(i)] - ax.lo) / ax.step();
    if (u <= 0.0) continue;
    if (u >= static_cast<double>(ax.nodes - 1)) {
      cell[static_cast<std::size_t>(i)] = ax.nodes - 2;
      frac[static_cast<std::size_t>(i)] = 1.0;
      continue;
    }
    int c = static_cast<int>(u);
    if (c > ax.nodes - 2) c = ax.nodes - 2;
    cell[static_cast<std::size_t>(i)] = c;
    frac[static_cast<std::size_t>(i)] = u - static_cast<double>(c);
  }
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << n); ++corner) {
    double w = 1.0;
    for (int i = 0; i < n; ++i)
      w *= (corner >> i) & 1u ? frac[static_cast<std::size_t>(i)]
                              : 1.0 - frac[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      idx += stride[static_cast<std::size_t>(i)] *
             static_cast<std::size_t>(cell[static_cast<std::size_t>(i)] +
                                      (((corner >> i) & 1u) ? 1 : 0));
    acc += w * slab[idx];
  }
  return acc;
}

}  // namespace

void ViolationReport::add(std::string kind, MultiIndex time_idx,
                          MultiIndex state_idx, double magnitude) {
  max_magnitude = std::max(max_magnitude, magnitude);
  entries.push_back(Violation{std::move(kind), std::move(time_idx),
                              std::move(state_idx), magnitude});
}

ValueField discrete_game_oracle(const GameInstance& g,
                                const MultitimeGrid& grid,
                                HamiltonianKind kind) {
  if (g.m != 1)
    throw UnsupportedError("backward-induction oracle needs m == 1");
  check_pair(g, grid);

  const int n = g.n;
  ValueField V(grid, "oracle");
  std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);

  const Axis& tax = grid.time_axis(0);
  const std::size_t last = static_cast<std::size_t>(tax.nodes - 1);
  for (std::size_t k = 0; k < grid.state_count(); ++k) {
    const MultiIndex ki = grid.state_unflat(k);
    for (int i = 0; i < n; ++i)
      env[static_cast<std::size_t>(g.x_slot() + i)] =
          grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);
    const double val = g.terminal_cost_c.eval(env);
    if (!std::isfinite(val))
      throw NumericError("oracle: non-finite terminal cost");
    V.at(last, k) = val;
  }

  const bool upper = kind == HamiltonianKind::Upper;
  const ControlSet& outer = upper ? g.v_set : g.u_set;
  const ControlSet& inner = upper ? g.u_set : g.v_set;
  const int outer_slot = upper ? g.v_slot() : g.u_slot();
  const int inner_slot = upper ? g.u_slot() : g.v_slot();
  const double dt = tax.step();

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  std::vector<double> foot(static_cast<std::size_t>(n), 0.0);
  for (int j = tax.nodes - 2; j >= 0; --j) {
    const double t_here = tax.coord(j);
    const double t_next = tax.coord(j + 1);
    const auto slab_next = V.state_slab(static_cast<std::size_t>(j + 1));
    for (std::size_t k = 0; k < grid.state_count(); ++k) {
      const MultiIndex ki = grid.state_unflat(k);
      for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] =
            grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);

      double best = 0.0;
      bool have_best = false;
      for (std::size_t o = 0; o < outer.size(); ++o) {
        const std::vector<double>& op = outer.point(o);
        for (std::size_t c = 0; c < op.size(); ++c)
          env[static_cast<std::size_t>(outer_slot) + c] = op[c];
        double inner_best = 0.0;
        bool have_inner = false;
        for (std::size_t in = 0; in < inner.size(); ++in) {
          const std::vector<double>& ip = inner.point(in);
          for (std::size_t c = 0; c < ip.size(); ++c)
            env[static_cast<std::size_t>(inner_slot) + c] = ip[c];

          env[static_cast<std::size_t>(g.t_slot())] = t_here;
          for (int i = 0; i < n; ++i)
            env[static_cast<std::size_t>(g.x_slot() + i)] =
                x[static_cast<std::size_t>(i)];
          for (int i = 0; i < n; ++i)
            foot[static_cast<std::size_t>(i)] =
                x[static_cast<std::size_t>(i)] +
                g.dynamic_c(0, i).eval(env) * dt;

          // right-endpoint quadrature: running cost at the arrival point
          env[static_cast<std::size_t>(g.t_slot())] = t_next;
          for (int i = 0; i < n; ++i)
            env[static_cast<std::size_t>(g.x_slot() + i)] =
                foot[static_cast<std::size_t>(i)];
          const double lval = g.running_cost_c.eval(env);

          const double val = lval * dt + oracle_interp(grid, slab_next, foot);
          const bool better = upper ? val > inner_best : val < inner_best;
          if (!have_inner || better) {
            inner_best = val;
            have_inner = true;
          }
        }
        const bool better = upper ? inner_best < best : inner_best > best;
        if (!have_best || better) {
          best = inner_best;
          have_best = true;
        }
      }
      if (!std::isfinite(best))
        throw NumericError("oracle: non-finite value at time node " +
                           std::to_string(j));
      V.at(static_cast<std::size_t>(j), k) = best;
    }
  }
  return V;
}

ViolationReport dpp_residual(const ValueField& field, const GameInstance& g,
                             const std::vector<int>& box_steps,
                             HamiltonianKind kind, double tolerance) {
  check_pair(g, field.grid());
  const MultitimeGrid& grid = field.grid();
  ViolationReport report;
  std::uint64_t clamps = 0;
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf) {
    const MultiIndex j = grid.time_unflat(tf);
    for (std::size_t k = 0; k < grid.state_count(); ++k) {
      const MultiIndex ki = grid.state_unflat(k);
      const double once = dpp_box_value(field, g, j, ki, box_steps, kind, &clamps);
      const double r = std::abs(field.at(tf, k) - once);
      ++report.tested_count;
      if (r > tolerance) report.add("dpp", j, ki, r);
    }
  }
  return report;
}

double QuadraticTest::value(const std::vector<double>& t,
                            const std::vector<double>& x) const {
  double v = c0;
  for (std::size_t a = 0; a < lin_t.size(); ++a)
    v += lin_t[a] * t[a] + quad_t[a] * t[a] * t[a];
  for (std::size_t i = 0; i < lin_x.size(); ++i)
    v += lin_x[i] * x[i] + quad_x[i] * x[i] * x[i];
  for (std::size_t a = 0; a < lin_t.size(); ++a)
    for (std::size_t i = 0; i < lin_x.size(); ++i)
      v += cross[a * lin_x.size() + i] * t[a] * x[i];
  return v;
}

double QuadraticTest::dt(int alpha, const std::vector<double>& t,
                         const std::vector<double>& x) const {
  const std::size_t a = static_cast<std::size_t>(alpha);
  double v = lin_t[a] + 2.0 * quad_t[a] * t[a];
  for (std::size_t i = 0; i < lin_x.size(); ++i)
    v += cross[a * lin_x.size() + i] * x[i];
  return v;
}

double QuadraticTest::dx(int i, const std::vector<double>& t,
                         const std::vector<double>& x) const {
  const std::size_t ii = static_cast<std::size_t>(i);
  double v = lin_x[ii] + 2.0 * quad_x[ii] * x[ii];
  for (std::size_t a = 0; a < lin_t.size(); ++a)
    v += cross[a * lin_x.size() + ii] * t[a];
  return v;
}

double QuadraticTest::scale() const {
  double s = 1.0;
  s = std::max(s, std::abs(c0));
  for (double c : lin_t) s = std::max(s, std::abs(c));
  for (double c : lin_x) s = std::max(s, std::abs(c));
  for (double c : quad_t) s = std::max(s, std::abs(c));
  for (double c : quad_x) s = std::max(s, std::abs(c));
  for (double c : cross) s = std::max(s, std::abs(c));
  return s;
}

QuadraticTest random_quadratic(int m, int n, Rng& rng) {
  QuadraticTest q;
  q.c0 = rng.uniform(-1.0, 1.0);
  q.lin_t.resize(static_cast<std::size_t>(m));
  for (double& c : q.lin_t) c = rng.uniform(-1.0, 1.0);
  q.lin_x.resize(static_cast<std::size_t>(n));
  for (double& c : q.lin_x) c = rng.uniform(-1.0, 1.0);
  q.quad_t.resize(static_cast<std::size_t>(m));
  for (double& c : q.quad_t) c = rng.uniform(-1.0, 1.0);
  q.quad_x.resize(static_cast<std::size_t>(n));
  for (double& c : q.quad_x) c = rng.uniform(-1.0, 1.0);
  q.cross.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  for (double& c : q.cross) c = rng.uniform(-1.0, 1.0);
  return q;
}

ViolationReport viscosity_check_with(const GeneratingField& field,
                                     const GameInstance& g,
                                     const std::vector<QuadraticTest>& tests) {
  const MultitimeGrid& grid = field.grid();
  check_pair(g, grid);
  const int m = g.m;
  const int n = g.n;
  ViolationReport report;

  bool has_interior = true;
  for (int a = 0; a < m; ++a)
    if (grid.time_axis(a).nodes < 3) has_interior = false;
  for (int i = 0; i < n; ++i)
    if (grid.state_axis(i).nodes < 3) has_interior = false;
  if (!has_interior || tests.empty()) return report;

  double dt_max = 0.0, dx_max = 0.0;
  for (int a = 0; a < m; ++a) dt_max = std::max(dt_max, grid.time_axis(a).step());
  for (int i = 0; i < n; ++i) dx_max = std::max(dx_max, grid.state_axis(i).step());

  const std::size_t tc = grid.time_count();
  const std::size_t sc = grid.state_count();

  // flat strides of single-axis moves
  std::vector<std::size_t> t_stride(static_cast<std::size_t>(m), 1);
  for (int a = m - 2; a >= 0; --a)
    t_stride[static_cast<std::size_t>(a)] =
        t_stride[static_cast<std::size_t>(a + 1)] *
        static_cast<std::size_t>(grid.time_axis(a + 1).nodes);
  std::vector<std::size_t> s_stride(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i)
    s_stride[static_cast<std::size_t>(i)] =
        s_stride[static_cast<std::size_t>(i + 1)] *
        static_cast<std::size_t>(grid.state_axis(i + 1).nodes);

  // component sum of the solved field, and node coordinates
  std::vector<double> sum_field(tc * sc, 0.0);
  for (int a = 0; a < m; ++a) {
    const auto& comp = field.component(a);
    for (std::size_t idx = 0; idx < sum_field.size(); ++idx)
      sum_field[idx] += comp[idx];
  }
  std::vector<std::vector<double>> tcoords(tc), xcoords(sc);
  for (std::size_t tf = 0; tf < tc; ++tf)
    tcoords[tf] = grid.time_coords(grid.time_unflat(tf));
  for (std::size_t k = 0; k < sc; ++k)
    xcoords[k] = grid.state_coords(grid.state_unflat(k));

  HamiltonianEvaluator ham(g);
  const double md = static_cast<double>(m);
  std::vector<std::vector<double>> p(
      static_cast<std::size_t>(m),
      std::vector<double>(static_cast<std::size_t>(n), 0.0));
  std::vector<double> diff(tc * sc, 0.0);

  for (const QuadraticTest& w : tests) {
    const double tol = 10.0 * (dt_max + dx_max) * w.scale();
    for (std::size_t tf = 0; tf < tc; ++tf)
      for (std::size_t k = 0; k < sc; ++k)
        diff[tf * sc + k] = sum_field[tf * sc + k] - w.value(tcoords[tf], xcoords[k]);

    for (std::size_t tf = 0; tf < tc; ++tf) {
      const MultiIndex j = grid.time_unflat(tf);
      bool interior = true;
      for (int a = 0; a < m; ++a)
        if (j[a] == 0 || j[a] == grid.time_axis(a).nodes - 1) interior = false;
      if (!interior) continue;
      for (std::size_t k = 0; k < sc; ++k) {
        const MultiIndex ki = grid.state_unflat(k);
        bool sinterior = true;
        for (int i = 0; i < n; ++i)
          if (ki[i] == 0 || ki[i] == grid.state_axis(i).nodes - 1)
            sinterior = false;
        if (!sinterior) continue;

        const double here = diff[tf * sc + k];
        bool is_max = true, is_min = true;
        for (int a = 0; a < m && (is_max || is_min); ++a) {
          for (int d : {-1, 1}) {
            const std::size_t nb =
                (d < 0 ? tf - t_stride[static_cast<std::size_t>(a)]
                       : tf + t_stride[static_cast<std::size_t>(a)]) * sc + k;
            if (here < diff[nb]) is_max = false;
            if (here > diff[nb]) is_min = false;
          }
        }
        for (int i = 0; i < n && (is_max || is_min); ++i) {
          for (int d : {-1, 1}) {
            const std::size_t nb =
                tf * sc + (d < 0 ? k - s_stride[static_cast<std::size_t>(i)]
                                 : k + s_stride[static_cast<std::size_t>(i)]);
            if (here < diff[nb]) is_max = false;
            if (here > diff[nb]) is_min = false;
          }
        }
        if (!is_max && !is_min) continue;

        const std::vector<double>& t = tcoords[tf];
        const std::vector<double>& x = xcoords[k];
        double div_term = 0.0;
        for (int a = 0; a < m; ++a) div_term += w.dt(a, t, x);
        div_term /= md;
        for (int a = 0; a < m; ++a)
          for (int i = 0; i < n; ++i)
            p[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] =
                w.dx(i, t, x) / md;
        const double lhs =
            div_term + ham.saddle(HamiltonianKind::Upper, t, x, p).value;

        if (is_max) {
          ++report.tested_count;
          if (lhs < -tol) report.add("subsolution", j, ki, -tol - lhs);
        }
        if (is_min) {
          ++report.tested_count;
          if (lhs > tol) report.add("supersolution", j, ki, lhs - tol);
        }
      }
    }
  }
  return report;
}

ViolationReport viscosity_check(const GeneratingField& field,
                                const GameInstance& instance, int test_family,
                                std::uint64_t rng_seed) {
  if (test_family < 0)
    throw InvalidSpecError("test_family must be non-negative");
  Rng rng(rng_seed);
  std::vector<QuadraticTest> tests;
  tests.reserve(static_cast<std::size_t>(test_family));
  for (int i = 0; i < test_family; ++i)
    tests.push_back(random_quadratic(instance.m, instance.n, rng));
  return viscosity_check_with(field, instance, tests);
}

double payoff_of_controls(const GameInstance& g, const MultitimeGrid& grid,
                          const std::vector<std::vector<double>>& u_traj,
                          const std::vector<std::vector<double>>& v_traj,
                          const std::vector<double>& start_t,
                          const std::vector<double>& start_x,
                          PayoffDetails* details) {
  check_pair(g, grid);
  const int m = g.m;
  const int n = g.n;
  if (start_t.size() != static_cast<std::size_t>(m))
    throw InvalidSpecError("start time has wrong dimension");
  if (start_x.size() != static_cast<std::size_t>(n))
    throw InvalidSpecError("start state has wrong dimension");

  MultiIndex start(static_cast<std::size_t>(m), 0);
  for (int a = 0; a < m; ++a) {
    const Axis& ax = grid.time_axis(a);
    const long idx = std::lround((start_t[static_cast<std::size_t>(a)] - ax.lo) /
                                 ax.step());
    if (idx < 0 || idx >= ax.nodes ||
        std::abs(start_t[static_cast<std::size_t>(a)] -
                 ax.coord(static_cast<int>(idx))) > 1e-9)
      throw InvalidSpecError("start time must lie on a grid time node");
    start[a] = static_cast<int>(idx);
  }

  std::vector<int> rsteps(static_cast<std::size_t>(m), 0);
  std::vector<std::size_t> rstride(static_cast<std::size_t>(m), 1);
  std::size_t expected = 1;
  for (int a = m - 1; a >= 0; --a) {
    rsteps[static_cast<std::size_t>(a)] =
        grid.time_axis(a).nodes - 1 - start[a];
    rstride[static_cast<std::size_t>(a)] = expected;
    expected *= static_cast<std::size_t>(rsteps[static_cast<std::size_t>(a)] + 1);
  }
  if (u_traj.size() != expected || v_traj.size() != expected)
    throw InvalidSpecError(
        "control paths need one sample per time node of the start-to-terminal "
        "box (" + std::to_string(expected) + " samples)");
  for (const auto& s : u_traj)
    if (static_cast<int>(s.size()) != g.u_set.dim())
      throw InvalidSpecError("u path sample has wrong dimension");
  for (const auto& s : v_traj)
    if (static_cast<int>(s.size()) != g.v_set.dim())
      throw InvalidSpecError("v path sample has wrong dimension");

  const auto rel_flat = [&](const MultiIndex& jj) {
    std::size_t f = 0;
    for (int a = 0; a < m; ++a)
      f += rstride[static_cast<std::size_t>(a)] *
           static_cast<std::size_t>(jj[a] - start[a]);
    return f;
  };

  const FeedbackFn pick = [&](const std::vector<double>& t,
                              const std::vector<double>&) {
    MultiIndex jj(static_cast<std::size_t>(m), 0);
    for (int a = 0; a < m; ++a) {
      const Axis& ax = grid.time_axis(a);
      long idx = std::lround((t[static_cast<std::size_t>(a)] - ax.lo) / ax.step());
      idx = std::clamp(idx, 0L, static_cast<long>(ax.nodes - 1));
      jj[a] = static_cast<int>(idx);
    }
    const std::size_t f = rel_flat(jj);
    return std::make_pair(u_traj[f], v_traj[f]);
  };
  const Sheet sheet = integrate_flow(g, grid, pick, start, start_x);

  std::vector<int> moving;
  for (int a = 0; a < m; ++a)
    if (rsteps[static_cast<std::size_t>(a)] > 0) moving.push_back(a);

  double integral = 0.0;
  if (!moving.empty()) {
    std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
    integral = box_integral(
        grid, start, grid.terminal_index(), [&](const MultiIndex& jj) {
          int sidx = rsteps[static_cast<std::size_t>(moving[0])];
          for (int a : moving) sidx = std::min(sidx, jj[a] - start[a]);
          const SheetSample& sp =
              sheet.samples[static_cast<std::size_t>(sidx)];
          const std::size_t f = rel_flat(jj);
          const std::vector<double> tt = grid.time_coords(jj);
          for (int a = 0; a < m; ++a)
            env[static_cast<std::size_t>(g.t_slot() + a)] =
                tt[static_cast<std::size_t>(a)];
          for (int i = 0; i < n; ++i)
            env[static_cast<std::size_t>(g.x_slot() + i)] =
                sp.state[static_cast<std::size_t>(i)];
          for (std::size_t c = 0; c < u_traj[f].size(); ++c)
            env[static_cast<std::size_t>(g.u_slot()) + c] = u_traj[f][c];
          for (std::size_t c = 0; c < v_traj[f].size(); ++c)
            env[static_cast<std::size_t>(g.v_slot()) + c] = v_traj[f][c];
          return g.running_cost_c.eval(env);
        });
  }
  if (!std::isfinite(integral))
    throw NumericError("payoff: non-finite running-cost integral");

  const std::vector<double>& end_state = sheet.samples.back().state;
  std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
  for (int i = 0; i < n; ++i)
    env[static_cast<std::size_t>(g.x_slot() + i)] =
        end_state[static_cast<std::size_t>(i)];
  const double terminal = g.terminal_cost_c.eval(env);
  if (!std::isfinite(terminal))
    throw NumericError("payoff: non-finite terminal cost");

  if (details) {
    details->end_state = end_state;
    details->running_integral = integral;
    details->terminal_value = terminal;
    details->clamp_events = sheet.clamp_events;
  }
  return integral + terminal;
}

FieldComparison compare_fields(const ValueField& a, const ValueField& b) {
  if (!same_layout(a.grid(), b.grid()))
    throw GridError("compared fields live on different grids");
  FieldComparison out;
  const MultitimeGrid& grid = a.grid();
  const std::size_t sc = grid.state_count();
  double sq = 0.0;
  std::size_t arg_tf = 0, arg_k = 0;
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf)
    for (std::size_t k = 0; k < sc; ++k) {
      const double d = std::abs(a.at(tf, k) - b.at(tf, k));
      sq += d * d;
      if (d > out.sup_norm) {
        out.sup_norm = d;
        arg_tf = tf;
        arg_k = k;
      }
    }
  out.l2_norm = std::sqrt(sq);
  out.argmax_time = grid.time_unflat(arg_tf);
  out.argmax_state = grid.state_unflat(arg_k);
  return out;
}

double remark2_constraint_residual(int points, std::uint64_t seed) {
  if (points < 1) throw InvalidSpecError("need at least one sample point");
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double t1 = rng.uniform(0.5, 2.0);
    const double t2 = rng.uniform(0.5, 2.0);
    const double u1 = -t1, u2 = -t2;
    const double dF1 = 1.0 / t2;          // dF/dt1 of F = t1/t2
    const double dF2 = -t1 / (t2 * t2);   // dF/dt2
    worst = std::max(worst, std::abs(u1 * dF1 + u2 * dF2));
  }
  return worst;
}

}  // namespace mtg
