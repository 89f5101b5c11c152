#include "mtg/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>

namespace mtg {
namespace {

std::string node_label(const MultitimeGrid& grid, std::size_t tflat,
                       std::size_t sflat) {
  const MultiIndex j = grid.time_unflat(tflat);
  const MultiIndex k = grid.state_unflat(sflat);
  std::string s = "time index (";
  for (std::size_t a = 0; a < j.size(); ++a) {
    if (a) s += ",";
    s += std::to_string(j[a]);
  }
  s += "), state index (";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(k[i]);
  }
  s += ")";
  return s;
}

void check_setup(const GameInstance& g, const MultitimeGrid& grid) {
  if (g.running_cost_c.empty())
    throw InvalidSpecError("game instance must be finalized before solving");
  if (grid.m() != g.m || grid.n() != g.n)
    throw InvalidSpecError("grid dimensions do not match the instance");
  for (int a = 0; a < g.m; ++a) {
    const Axis& ax = grid.time_axis(a);
    if (std::abs(ax.lo) > 1e-12 ||
        std::abs(ax.hi - g.horizon[static_cast<std::size_t>(a)]) > 1e-9)
      throw InvalidSpecError("time axis " + std::to_string(a + 1) +
                             " must span [0, horizon]");
  }
}

// Runs fn(begin, end, worker) over [0, count) split into contiguous chunks.
// Exceptions are re-thrown in worker order after all chunks finish.
void run_chunks(std::size_t count, int threads,
                const std::function<void(std::size_t, std::size_t, int)>& fn) {
  if (count == 0) return;
  int t = threads < 1 ? 1 : threads;
  if (static_cast<std::size_t>(t) > count) t = static_cast<int>(count);
  if (t == 1) {
    fn(0, count, 0);
    return;
  }
  const std::size_t per = (count + static_cast<std::size_t>(t) - 1) /
                          static_cast<std::size_t>(t);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t));
  std::vector<std::thread> pool;
  for (int w = 0; w < t; ++w) {
    const std::size_t b = static_cast<std::size_t>(w) * per;
    const std::size_t e = std::min(count, b + per);
    if (b >= e) break;
    pool.emplace_back([&fn, &errors, b, e, w] {
      try {
        fn(b, e, w);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& ep : errors)
    if (ep) std::rethrow_exception(ep);
}

// Per-pair foot location for the one-state-dimension fast path.
struct Foot1 {
  double frac = 0.0;
  int cell = 0;
  bool clamped = false;
};

struct LevelNode {
  std::size_t tflat = 0;
  std::size_t target_flat = 0;
  unsigned mask = 0;  // bit a set when time axis a is at its last node
  bool terminal = false;
};

SolveResult solve_impl(const GameInstance& g, const MultitimeGrid& in_grid,
                       const SolverOptions& opt, HamiltonianKind kind) {
  check_setup(g, in_grid);
  if (opt.refinement < 0)
    throw InvalidSpecError("refinement level must be >= 0");
  if (opt.scheme != "semi_lagrangian")
    throw InvalidSpecError("unknown scheme: " + opt.scheme);
  MultitimeGrid grid = in_grid;
  for (int r = 0; r < opt.refinement; ++r) grid = grid.with_steps_halved();

  const int m = g.m;
  const int n = g.n;
  const bool upper = kind == HamiltonianKind::Upper;
  const std::size_t state_count = grid.state_count();

  ValueField M(grid, upper ? "upper" : "lower");
  std::atomic<std::uint64_t> clamp_total{0};
  std::vector<double> level_seconds;

  // Terminal data: M(T, x) = g(x).
  const std::size_t terminal_flat = grid.time_flat(grid.terminal_index());
  {
    std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
    auto slab = M.state_slab(terminal_flat);
    for (std::size_t k = 0; k < state_count; ++k) {
      const MultiIndex ki = grid.state_unflat(k);
      for (int i = 0; i < n; ++i)
        env[static_cast<std::size_t>(g.x_slot() + i)] = grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);
      const double val = g.terminal_cost_c.eval(env);
      if (!std::isfinite(val))
        throw NumericError("non-finite terminal cost at " +
                           node_label(grid, terminal_flat, k));
      slab[k] = val;
    }
  }

  const ControlSet& outer = upper ? g.v_set : g.u_set;
  const ControlSet& inner = upper ? g.u_set : g.v_set;
  const int outer_slot = upper ? g.v_slot() : g.u_slot();
  const int inner_slot = upper ? g.u_slot() : g.v_slot();
  const std::size_t no = outer.size();
  const std::size_t ni = inner.size();
  const std::size_t np = no * ni;

  // When an expression never reads the time slots its value per (state,
  // control pair) can be tabulated once instead of per time node.  All
  // catalog dynamics qualify; it is what makes the fine grids affordable.
  bool cache_X = true;
  for (const auto& d : g.dynamics_c)
    if (d.reads_slot_range(g.t_slot(), m)) cache_X = false;
  const bool cache_L = !g.running_cost_c.reads_slot_range(g.t_slot(), m);

  std::vector<double> l_table;
  if (cache_L) {
    l_table.resize(state_count * np);
    run_chunks(state_count, opt.threads, [&](std::size_t b, std::size_t e, int) {
      std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
      for (std::size_t k = b; k < e; ++k) {
        const MultiIndex ki = grid.state_unflat(k);
        for (int i = 0; i < n; ++i)
          env[static_cast<std::size_t>(g.x_slot() + i)] =
              grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);
        std::size_t pi = k * np;
        for (std::size_t o = 0; o < no; ++o) {
          const std::vector<double>& op = outer.point(o);
          for (std::size_t c = 0; c < op.size(); ++c)
            env[static_cast<std::size_t>(outer_slot) + c] = op[c];
          for (std::size_t in = 0; in < ni; ++in, ++pi) {
            const std::vector<double>& ip = inner.point(in);
            for (std::size_t c = 0; c < ip.size(); ++c)
              env[static_cast<std::size_t>(inner_slot) + c] = ip[c];
            l_table[pi] = g.running_cost_c.eval(env);
          }
        }
      }
    });
  }

  // Per-mask geometry.  vol multiplies the edges of every axis, so any maxed
  // axis collapses it to zero and the update degenerates to pure transport.
  const unsigned mask_count = 1u << m;
  std::vector<std::vector<double>> h_by_mask(mask_count);
  std::vector<double> vol_by_mask(mask_count, 0.0);
  for (unsigned mask = 0; mask < mask_count; ++mask) {
    std::vector<double> h(static_cast<std::size_t>(m), 0.0);
    double vol = 1.0;
    for (int a = 0; a < m; ++a) {
      const int s = (mask >> a) & 1u ? 0 : 1;
      h[static_cast<std::size_t>(a)] =
          static_cast<double>(s) * grid.time_axis(a).step();
      vol *= h[static_cast<std::size_t>(a)];
    }
    h_by_mask[mask] = std::move(h);
    vol_by_mask[mask] = vol;
  }

  // Foot tables per mask (all masks except the all-maxed terminal one).
  const bool one_state_axis = n == 1 && grid.state_axis(0).nodes >= 2;
  std::vector<std::vector<Foot1>> foot1(mask_count);
  std::vector<std::vector<double>> footn(mask_count);
  if (cache_X) {
    for (unsigned mask = 0; mask + 1 < mask_count; ++mask) {
      const std::vector<double>& h = h_by_mask[mask];
      if (one_state_axis) foot1[mask].resize(state_count * np);
      else footn[mask].resize(state_count * np * static_cast<std::size_t>(n));
      run_chunks(state_count, opt.threads, [&](std::size_t b, std::size_t e, int) {
        std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
        std::vector<double> x(static_cast<std::size_t>(n), 0.0);
        std::vector<double> foot(static_cast<std::size_t>(n), 0.0);
        for (std::size_t k = b; k < e; ++k) {
          const MultiIndex ki = grid.state_unflat(k);
          for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] =
                grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);
            env[static_cast<std::size_t>(g.x_slot() + i)] = x[static_cast<std::size_t>(i)];
          }
          std::size_t pi = k * np;
          for (std::size_t o = 0; o < no; ++o) {
            const std::vector<double>& op = outer.point(o);
            for (std::size_t c = 0; c < op.size(); ++c)
              env[static_cast<std::size_t>(outer_slot) + c] = op[c];
            for (std::size_t in = 0; in < ni; ++in, ++pi) {
              const std::vector<double>& ip = inner.point(in);
              for (std::size_t c = 0; c < ip.size(); ++c)
                env[static_cast<std::size_t>(inner_slot) + c] = ip[c];
              for (int i = 0; i < n; ++i)
                foot[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
              for (int a = 0; a < m; ++a) {
                if (h[static_cast<std::size_t>(a)] == 0.0) continue;
                for (int i = 0; i < n; ++i)
                  foot[static_cast<std::size_t>(i)] +=
                      g.dynamic_c(a, i).eval(env) * h[static_cast<std::size_t>(a)];
              }
              if (one_state_axis) {
                const AxisQuery q = locate_on_axis(grid.state_axis(0), foot[0]);
                foot1[mask][pi] = Foot1{q.frac, q.cell, q.clamped};
              } else {
                for (int i = 0; i < n; ++i)
                  footn[mask][pi * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(i)] =
                      foot[static_cast<std::size_t>(i)];
              }
            }
          }
        }
      });
    }
  }

  const auto levels = antidiagonal_levels(grid);
  std::vector<LevelNode> nodes;
  for (const auto& level : levels) {
    const auto start = std::chrono::steady_clock::now();

    nodes.clear();
    nodes.reserve(level.size());
    for (const MultiIndex& j : level) {
      LevelNode ln;
      ln.tflat = grid.time_flat(j);
      ln.terminal = grid.is_terminal(j);
      MultiIndex target = j;
      for (int a = 0; a < m; ++a) {
        if (j[a] == grid.time_axis(a).nodes - 1) ln.mask |= 1u << a;
        else ++target[a];
      }
      ln.target_flat = grid.time_flat(target);
      nodes.push_back(ln);
    }

    const std::size_t items = nodes.size() * state_count;
    run_chunks(items, opt.threads, [&](std::size_t b, std::size_t e, int) {
      std::uint64_t local_clamps = 0;
      std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
      std::vector<double> foot_scratch(static_cast<std::size_t>(n), 0.0);
      const std::vector<int> one_step(static_cast<std::size_t>(m), 1);
      MultiIndex j_scratch, k_scratch;
      for (std::size_t item = b; item < e; ++item) {
        const LevelNode& ln = nodes[item / state_count];
        const std::size_t k = item % state_count;
        if (ln.terminal) continue;  // terminal data already written

        double best = 0.0;
        if (cache_X) {
          const double vol = vol_by_mask[ln.mask];
          const double* lrow = cache_L ? &l_table[k * np] : nullptr;
          const double* slab = M.state_slab(ln.target_flat).data();
          if (!cache_L) {
            const MultiIndex j = grid.time_unflat(ln.tflat);
            const MultiIndex ki = grid.state_unflat(k);
            for (int a = 0; a < m; ++a)
              env[static_cast<std::size_t>(g.t_slot() + a)] =
                  grid.time_axis(a).coord(j[static_cast<std::size_t>(a)]);
            for (int i = 0; i < n; ++i)
              env[static_cast<std::size_t>(g.x_slot() + i)] =
                  grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);
          }
          bool have_best = false;
          std::size_t pi = k * np;
          for (std::size_t o = 0; o < no; ++o) {
            if (!cache_L) {
              const std::vector<double>& op = outer.point(o);
              for (std::size_t c = 0; c < op.size(); ++c)
                env[static_cast<std::size_t>(outer_slot) + c] = op[c];
            }
            double inner_best = 0.0;
            bool have_inner = false;
            for (std::size_t in = 0; in < ni; ++in, ++pi) {
              double lval;
              if (cache_L) {
                lval = lrow[o * ni + in];
              } else {
                const std::vector<double>& ip = inner.point(in);
                for (std::size_t c = 0; c < ip.size(); ++c)
                  env[static_cast<std::size_t>(inner_slot) + c] = ip[c];
                lval = g.running_cost_c.eval(env);
              }
              double iv;
              if (one_state_axis) {
                const Foot1& f = foot1[ln.mask][pi];
                if (f.clamped) ++local_clamps;
                if (f.frac == 0.0) iv = slab[f.cell];
                else if (f.frac == 1.0) iv = slab[f.cell + 1];
                else iv = (1.0 - f.frac) * slab[f.cell] + f.frac * slab[f.cell + 1];
              } else {
                const double* fp =
                    &footn[ln.mask][pi * static_cast<std::size_t>(n)];
                for (int i = 0; i < n; ++i)
                  foot_scratch[static_cast<std::size_t>(i)] = fp[i];
                iv = interpolate_state(grid, M.state_slab(ln.target_flat),
                                       foot_scratch, &local_clamps);
              }
              const double val = lval * vol + iv;
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
        } else {
          j_scratch = grid.time_unflat(ln.tflat);
          k_scratch = grid.state_unflat(k);
          best = dpp_box_value(M, g, j_scratch, k_scratch, one_step, kind,
                               &local_clamps);
        }

        if (!std::isfinite(best))
          throw NumericError("solve diverged at " +
                             node_label(grid, ln.tflat, k));
        M.at(ln.tflat, k) = best;
      }
      if (local_clamps)
        clamp_total.fetch_add(local_clamps, std::memory_order_relaxed);
    });

    if (!opt.clamp && clamp_total.load() > 0)
      throw GridError("characteristic foot left the state box with clamping disabled");

    const auto stop = std::chrono::steady_clock::now();
    level_seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }

  GeneratingField comp(grid, M.name() + "_components");
  comp.set_terminal_note(g.terminal_cost.pretty_print() + " / m");
  const double md = static_cast<double>(m);
  for (int a = 0; a < m; ++a) {
    auto& dst = comp.component(a);
    const auto& src = M.data();
    for (std::size_t idx = 0; idx < src.size(); ++idx) dst[idx] = src[idx] / md;
  }

  return SolveResult{std::move(M), std::move(comp),
                     clamp_total.load(std::memory_order_relaxed),
                     std::move(level_seconds)};
}

}  // namespace

GeneratingField terminal_fill(const GameInstance& g, const MultitimeGrid& grid) {
  check_setup(g, grid);
  GeneratingField f(grid, "terminal");
  f.set_terminal_note(g.terminal_cost.pretty_print() + " / m");
  const std::size_t tf = grid.time_flat(grid.terminal_index());
  std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
  const double md = static_cast<double>(g.m);
  for (std::size_t k = 0; k < grid.state_count(); ++k) {
    const MultiIndex ki = grid.state_unflat(k);
    for (int i = 0; i < g.n; ++i)
      env[static_cast<std::size_t>(g.x_slot() + i)] =
          grid.state_axis(i).coord(ki[static_cast<std::size_t>(i)]);
    const double val = g.terminal_cost_c.eval(env);
    if (!std::isfinite(val))
      throw NumericError("non-finite terminal cost at state index " +
                         std::to_string(k));
    for (int a = 0; a < g.m; ++a) f.at(a, tf, k) = val / md;
  }
  return f;
}

SolveResult solve_upper(const GameInstance& instance, const MultitimeGrid& grid,
                        const SolverOptions& options) {
  return solve_impl(instance, grid, options, HamiltonianKind::Upper);
}

SolveResult solve_lower(const GameInstance& instance, const MultitimeGrid& grid,
                        const SolverOptions& options) {
  return solve_impl(instance, grid, options, HamiltonianKind::Lower);
}

double dpp_box_value(const ValueField& field, const GameInstance& g,
                     const MultiIndex& time_idx, const MultiIndex& state_idx,
                     const std::vector<int>& box_steps, HamiltonianKind kind,
                     std::uint64_t* clamp_events) {
  const MultitimeGrid& grid = field.grid();
  if (box_steps.size() != static_cast<std::size_t>(g.m))
    throw GridError("box_steps needs one entry per time axis");
  for (int b : box_steps)
    if (b < 1) throw GridError("box_steps must be at least 1");
  if (grid.m() != g.m || grid.n() != g.n)
    throw GridError("field grid does not match the instance dimensions");
  const int m = g.m;
  const int n = g.n;

  MultiIndex target = time_idx;
  std::vector<double> h(static_cast<std::size_t>(m), 0.0);
  double vol = 1.0;
  for (int a = 0; a < m; ++a) {
    const int remaining = grid.time_axis(a).nodes - 1 - time_idx[a];
    const int want = box_steps[static_cast<std::size_t>(a)];
    const int s = want < remaining ? want : remaining;
    target[a] = time_idx[a] + s;
    h[static_cast<std::size_t>(a)] =
        static_cast<double>(s) * grid.time_axis(a).step();
    vol *= h[static_cast<std::size_t>(a)];
  }
  const auto slab = field.state_slab(grid.time_flat(target));
  const std::vector<double> t = grid.time_coords(time_idx);
  const std::vector<double> x = grid.state_coords(state_idx);

  std::vector<double> env(static_cast<std::size_t>(g.env_size()), 0.0);
  for (int a = 0; a < m; ++a)
    env[static_cast<std::size_t>(g.t_slot() + a)] = t[static_cast<std::size_t>(a)];
  for (int i = 0; i < n; ++i)
    env[static_cast<std::size_t>(g.x_slot() + i)] = x[static_cast<std::size_t>(i)];

  const bool is_upper = kind == HamiltonianKind::Upper;
  const ControlSet& outer = is_upper ? g.v_set : g.u_set;
  const ControlSet& inner = is_upper ? g.u_set : g.v_set;
  const int outer_slot = is_upper ? g.v_slot() : g.u_slot();
  const int inner_slot = is_upper ? g.u_slot() : g.v_slot();

  std::vector<double> foot(static_cast<std::size_t>(n), 0.0);
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
      const double lval = g.running_cost_c.eval(env);
      for (int i = 0; i < n; ++i)
        foot[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
      for (int a = 0; a < m; ++a) {
        if (h[static_cast<std::size_t>(a)] == 0.0) continue;
        for (int i = 0; i < n; ++i)
          foot[static_cast<std::size_t>(i)] +=
              g.dynamic_c(a, i).eval(env) * h[static_cast<std::size_t>(a)];
      }
      const double iv = interpolate_state(grid, slab, foot, clamp_events);
      const double val = lval * vol + iv;
      const bool better = is_upper ? val > inner_best : val < inner_best;
      if (!have_inner || better) {
        inner_best = val;
        have_inner = true;
      }
    }
    const bool better = is_upper ? inner_best < best : inner_best > best;
    if (!have_best || better) {
      best = inner_best;
      have_best = true;
    }
  }
  return best;
}

double dpp_box_value(const ValueField& field, const GameInstance& instance,
                     const MultiIndex& time_idx, const MultiIndex& state_idx,
                     int box_steps, HamiltonianKind kind,
                     std::uint64_t* clamp_events) {
  if (box_steps < 1) throw GridError("box_steps must be at least 1");
  return dpp_box_value(field, instance, time_idx, state_idx,
                       std::vector<int>(static_cast<std::size_t>(instance.m),
                                        box_steps),
                       kind, clamp_events);
}

}  // namespace mtg
