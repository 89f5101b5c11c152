#include "mtg/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <ostream>

#include "mtg/config.hpp"
#include "mtg/io.hpp"
#include "mtg/solver.hpp"
#include "mtg/synthesis.hpp"
#include "mtg/verify.hpp"

namespace mtg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Prepared {
  RunConfig cfg;
  GameInstance game;
  MultitimeGrid grid;
  std::string out_dir;
  std::string hash;
};

Prepared prepare(const RunOptions& opt) {
  if (opt.refine < 0) throw ConfigError("--refine must be non-negative");
  if (opt.threads < 1) throw ConfigError("--threads must be at least 1");
  RunConfig cfg = parse_config_file(opt.config_path);
  if (opt.seed) cfg.verify.seed = *opt.seed;
  GameInstance game = config_instance(cfg);
  MultitimeGrid grid = config_grid(cfg, game);
  for (int k = 0; k < opt.refine; ++k) grid = grid.with_nodes_doubled();
  std::string out_dir = opt.out_dir.empty() ? cfg.output.dir : opt.out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + out_dir +
                      "': " + ec.message());
  return Prepared{std::move(cfg), std::move(game), std::move(grid),
                  std::move(out_dir), ""};
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidSpecError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GridError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    log << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const EvalError& e) {
    log << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

double max_abs(const ValueField& f) {
  double worst = 0.0;
  for (double v : f.data()) worst = std::max(worst, std::abs(v));
  return worst;
}

json game_json(const GameInstance& g) {
  json dynamics = json::array();
  for (int a = 0; a < g.m; ++a)
    for (int i = 0; i < g.n; ++i)
      dynamics.push_back(g.dynamic(a, i).pretty_print());
  return {{"name", g.name},
          {"m", g.m},
          {"n", g.n},
          {"p", g.p},
          {"q", g.q},
          {"horizon", g.horizon},
          {"running_cost", g.running_cost.pretty_print()},
          {"terminal_cost", g.terminal_cost.pretty_print()},
          {"dynamics", dynamics},
          {"u_samples", g.u_set.size()},
          {"v_samples", g.v_set.size()}};
}

json options_json(const Prepared& pre, const RunOptions& opt) {
  const char* which = pre.cfg.solver.which == SolveWhich::Upper   ? "upper"
                      : pre.cfg.solver.which == SolveWhich::Lower ? "lower"
                                                                  : "both";
  return {{"which", which},
          {"scheme", pre.cfg.solver.scheme},
          {"refinement", pre.cfg.solver.refinement},
          {"clamp", pre.cfg.solver.clamp},
          {"threads", opt.threads},
          {"refine_doublings", opt.refine},
          {"seed", pre.cfg.verify.seed}};
}

// Listing every violating node would bloat reports on badly broken fields;
// keep the first entries and say how many there were.
json capped_report_json(const ViolationReport& rep, std::size_t cap = 100) {
  if (rep.entries.size() <= cap) {
    json j = io::report_json(rep);
    j["total_violations"] = rep.entries.size();
    return j;
  }
  ViolationReport head;
  head.max_magnitude = rep.max_magnitude;
  head.tested_count = rep.tested_count;
  head.entries.assign(rep.entries.begin(),
                      rep.entries.begin() + static_cast<std::ptrdiff_t>(cap));
  json j = io::report_json(head);
  j["ok"] = rep.ok();
  j["total_violations"] = rep.entries.size();
  return j;
}

ViolationReport ordering_check(const ValueField& upper, const ValueField& lower,
                               double tolerance) {
  ViolationReport rep;
  const MultitimeGrid& grid = upper.grid();
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf)
    for (std::size_t sf = 0; sf < grid.state_count(); ++sf) {
      ++rep.tested_count;
      double excess = lower.at(tf, sf) - upper.at(tf, sf);
      if (excess > tolerance)
        rep.add("ordering", grid.time_unflat(tf), grid.state_unflat(sf),
                excess);
    }
  return rep;
}

// Nearest grid node to a requested coordinate; rejects points off the axis.
int axis_node(const Axis& ax, double want, const char* what) {
  if (want < ax.lo - 1e-9 || want > ax.hi + 1e-9)
    throw ConfigError(std::string(what) + " " + io::format_double(want) +
                      " lies outside [" + io::format_double(ax.lo) + ", " +
                      io::format_double(ax.hi) + "]");
  if (ax.nodes < 2) return 0;
  double u = (want - ax.lo) / ax.step();
  int node = static_cast<int>(std::lround(u));
  return std::clamp(node, 0, ax.nodes - 1);
}

}  // namespace

int run_solve(const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&]() -> int {
    Prepared pre = prepare(opt);
    const std::string hash = pre.cfg.hash();
    SolverOptions sopts = pre.cfg.solver;
    sopts.threads = opt.threads;

    json meta{{"config_hash", hash},
              {"game", game_json(pre.game)},
              {"grid", io::grid_json(pre.grid)},
              {"options", options_json(pre, opt)}};
    json timings{{"config_hash", hash}};
    json files = json::array();

    auto emit = [&](const SolveResult& r, const std::string& value_name,
                    const std::string& csv, const std::string& comp_csv) {
      io::write_value_csv(pre.out_dir + "/" + csv, r.value, hash);
      files.push_back(csv);
      if (pre.cfg.output.components) {
        io::write_components_csv(pre.out_dir + "/" + comp_csv, r.components,
                                 hash);
        files.push_back(comp_csv);
      }
      meta[value_name] = {{"max_abs_value", max_abs(r.value)},
                          {"clamp_events", r.clamp_events},
                          {"terminal_note", r.components.terminal_note()}};
      timings[value_name] = {
          {"level_seconds", r.level_seconds},
          {"total_seconds", std::accumulate(r.level_seconds.begin(),
                                            r.level_seconds.end(), 0.0)}};
      log << value_name << ": max|value| = " << io::format_double(max_abs(r.value))
          << ", clamp events = " << r.clamp_events << '\n';
    };

    if (pre.cfg.solver.which != SolveWhich::Lower)
      emit(solve_upper(pre.game, pre.grid, sopts), "upper", "M.csv",
           "M_alpha.csv");
    if (pre.cfg.solver.which != SolveWhich::Upper)
      emit(solve_lower(pre.game, pre.grid, sopts), "lower", "m.csv",
           "m_alpha.csv");

    meta["files"] = files;
    io::write_json(pre.out_dir + "/meta.json", meta);
    io::write_json(pre.out_dir + "/timings.json", timings);
    log << "wrote " << pre.out_dir << "/meta.json\n";
    return kExitOk;
  });
}

int run_verify(const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&]() -> int {
    Prepared pre = prepare(opt);
    const std::string hash = pre.cfg.hash();
    SolverOptions sopts = pre.cfg.solver;
    sopts.threads = opt.threads;

    // every check compares against solved fields; ordering needs both kinds
    SolveResult upper = solve_upper(pre.game, pre.grid, sopts);
    SolveResult lower = solve_lower(pre.game, pre.grid, sopts);

    json checks;
    bool failed = false;
    auto status_of = [](bool ok) { return ok ? "ok" : "violations"; };

    for (const std::string& check : pre.cfg.verify.checks) {
      if (check == "ordering") {
        ViolationReport rep = ordering_check(upper.value, lower.value,
                                             pre.cfg.verify.ordering_tolerance);
        json j = capped_report_json(rep);
        j["status"] = status_of(rep.ok());
        j["tolerance"] = pre.cfg.verify.ordering_tolerance;
        checks["ordering"] = j;
        failed = failed || !rep.ok();
        log << "ordering: " << status_of(rep.ok()) << " (max excess "
            << io::format_double(rep.max_magnitude) << ")\n";
      } else if (check == "dpp") {
        std::vector<int> steps = pre.cfg.verify.box_steps;
        if (steps.empty())
          steps.assign(static_cast<std::size_t>(pre.game.m), 1);
        bool ok = true;
        json j;
        auto side = [&](const char* name, const ValueField& f,
                        HamiltonianKind kind) {
          ViolationReport rep = dpp_residual(f, pre.game, steps, kind,
                                             pre.cfg.verify.dpp_tolerance);
          json s = capped_report_json(rep);
          s["status"] = status_of(rep.ok());
          j[name] = s;
          ok = ok && rep.ok();
        };
        side("upper", upper.value, HamiltonianKind::Upper);
        side("lower", lower.value, HamiltonianKind::Lower);
        j["box_steps"] = steps;
        j["tolerance"] = pre.cfg.verify.dpp_tolerance;
        j["status"] = status_of(ok);
        checks["dpp"] = j;
        failed = failed || !ok;
        log << "dpp: " << status_of(ok) << '\n';
      } else if (check == "oracle") {
        if (pre.game.m != 1) {
          checks["oracle"] = {{"status", "skipped: m != 1"}};
          log << "oracle: skipped: m != 1\n";
          continue;
        }
        bool ok = true;
        json j;
        auto side = [&](const char* name, const ValueField& f,
                        HamiltonianKind kind) {
          ValueField reference = discrete_game_oracle(pre.game, pre.grid, kind);
          FieldComparison cmp = compare_fields(f, reference);
          bool side_ok = cmp.sup_norm <= pre.cfg.verify.oracle_tolerance;
          j[name] = {{"sup_norm", cmp.sup_norm},
                     {"l2_norm", cmp.l2_norm},
                     {"argmax_time", cmp.argmax_time},
                     {"argmax_state", cmp.argmax_state},
                     {"status", status_of(side_ok)}};
          ok = ok && side_ok;
        };
        side("upper", upper.value, HamiltonianKind::Upper);
        side("lower", lower.value, HamiltonianKind::Lower);
        j["tolerance"] = pre.cfg.verify.oracle_tolerance;
        j["status"] = status_of(ok);
        checks["oracle"] = j;
        failed = failed || !ok;
        log << "oracle: " << status_of(ok) << '\n';
      } else if (check == "viscosity") {
        ViolationReport rep =
            viscosity_check(upper.components, pre.game,
                            pre.cfg.verify.test_family, pre.cfg.verify.seed);
        json j = capped_report_json(rep);
        j["status"] = status_of(rep.ok());
        j["test_family"] = pre.cfg.verify.test_family;
        j["seed"] = pre.cfg.verify.seed;
        checks["viscosity"] = j;
        failed = failed || !rep.ok();
        log << "viscosity: " << status_of(rep.ok()) << " ("
            << rep.tested_count << " inequalities)\n";
      }
    }

    json report{{"config_hash", hash},
                {"game", game_json(pre.game)},
                {"grid", io::grid_json(pre.grid)},
                {"checks", checks},
                {"ok", !failed}};
    io::write_json(pre.out_dir + "/report.json", report);
    log << "wrote " << pre.out_dir << "/report.json\n";
    return failed ? kExitVerification : kExitOk;
  });
}

int run_synthesize(const RunOptions& opt, std::ostream& log) {
  return guarded(log, [&]() -> int {
    Prepared pre = prepare(opt);
    const std::string hash = pre.cfg.hash();
    SolverOptions sopts = pre.cfg.solver;
    sopts.threads = opt.threads;

    std::vector<double> start_t = pre.cfg.synthesize.start_time;
    if (start_t.empty())
      start_t.assign(static_cast<std::size_t>(pre.grid.m()), 0.0);
    std::vector<double> start_x = pre.cfg.synthesize.start_state;
    if (start_x.empty())
      for (int i = 0; i < pre.grid.n(); ++i) {
        const Axis& ax = pre.grid.state_axis(i);
        start_x.push_back(0.5 * (ax.lo + ax.hi));
      }

    MultiIndex t_idx, s_idx;
    for (int a = 0; a < pre.grid.m(); ++a)
      t_idx.push_back(axis_node(pre.grid.time_axis(a),
                                start_t[static_cast<std::size_t>(a)],
                                "start time"));
    for (int i = 0; i < pre.grid.n(); ++i)
      s_idx.push_back(axis_node(pre.grid.state_axis(i),
                                start_x[static_cast<std::size_t>(i)],
                                "start state"));

    const bool upper = pre.cfg.synthesize.kind == HamiltonianKind::Upper;
    SolveResult solved = upper ? solve_upper(pre.game, pre.grid, sopts)
                               : solve_lower(pre.game, pre.grid, sopts);
    FeedbackPolicy policy = feedback_controls(solved.value, pre.game, pre.grid);
    RealizedComparison rv =
        realized_vs_value(pre.game, solved.value, policy, t_idx, s_idx);

    io::write_sheet_csv(pre.out_dir + "/sheet.csv", rv.sheet, pre.game.p,
                        pre.game.q, hash);
    json meta{{"config_hash", hash},
              {"game", game_json(pre.game)},
              {"grid", io::grid_json(pre.grid)},
              {"options", options_json(pre, opt)},
              {"kind", upper ? "upper" : "lower"},
              {"start_time", start_t},
              {"start_state", start_x},
              {"start_time_idx", t_idx},
              {"start_state_idx", s_idx},
              {"realized", rv.realized},
              {"value_at_start", rv.value_at_start},
              {"gap", rv.gap},
              {"compatibility_residual", rv.sheet.compatibility_residual},
              {"sheet_clamp_events", rv.sheet.clamp_events},
              {"sheet_steps", rv.sheet.samples.size()},
              {"files", json::array({"sheet.csv"})}};
    io::write_json(pre.out_dir + "/meta.json", meta);
    log << "gap = " << io::format_double(rv.gap) << " (realized "
        << io::format_double(rv.realized) << ", value "
        << io::format_double(rv.value_at_start) << ")\n";
    log << "wrote " << pre.out_dir << "/sheet.csv\n";
    return kExitOk;
  });
}

int run_catalog(std::ostream& out) {
  for (const std::string& name : catalog_names()) {
    GameInstance g = catalog_instance(name, 1);
    out << name << "\n";
    out << "  state dim " << g.n << ", u dim " << g.p << " ("
        << g.u_set.size() << " samples), v dim " << g.q << " ("
        << g.v_set.size() << " samples)\n";
    out << "  L = " << g.running_cost.pretty_print()
        << "   g = " << g.terminal_cost.pretty_print()
        << "   X = " << g.dynamic(0, 0).pretty_print() << "\n";
    out << "  " << g.benchmark.note << "\n";
  }
  return kExitOk;
}

}  // namespace mtg
