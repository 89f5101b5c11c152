#include "mtg/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mtg/errors.hpp"
#include "mtg/io.hpp"

namespace mtg {

namespace {

const char* const kSections[] = {"game",   "grid",       "solver",
                                 "verify", "synthesize", "output"};

struct Entry {
  std::string value;
  int line = 0;
  bool quoted = false;
  mutable bool used = false;
};

struct RawConfig {
  std::string origin;
  std::map<std::string, std::map<std::string, Entry>> sections;

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin + ": " + msg);
  }

  const Entry* find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  void check_all_used() const {
    for (const auto& [sec, entries] : sections)
      for (const auto& [key, entry] : entries)
        if (!entry.used)
          fail(entry.line, "unknown key '" + key + "' in section [" + sec + "]");
  }
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '[') {
      if (t.back() != ']')
        raw.fail(lineno, "section header is missing its closing ']'");
      section = trim(t.substr(1, t.size() - 2));
      bool known = std::any_of(std::begin(kSections), std::end(kSections),
                               [&](const char* s) { return section == s; });
      if (!known) raw.fail(lineno, "unknown section [" + section + "]");
      raw.sections[section];  // remember even if empty
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      raw.fail(lineno, "expected 'key = value' or a [section] header");
    if (section.empty())
      raw.fail(lineno, "entry appears before any [section] header");
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) raw.fail(lineno, "empty key");
    std::string rest = trim(t.substr(eq + 1));

    Entry entry;
    entry.line = lineno;
    if (!rest.empty() && rest[0] == '"') {
      std::size_t close = rest.find('"', 1);
      if (close == std::string::npos)
        raw.fail(lineno, "unterminated quoted value");
      std::string tail = trim(rest.substr(close + 1));
      if (!tail.empty() && tail[0] != '#')
        raw.fail(lineno, "unexpected text after the closing quote");
      entry.value = rest.substr(1, close - 1);
      entry.quoted = true;
    } else {
      std::size_t hash = rest.find('#');
      entry.value = trim(hash == std::string::npos ? rest : rest.substr(0, hash));
      if (entry.value.empty()) raw.fail(lineno, "empty value for '" + key + "'");
    }
    auto [it, inserted] = raw.sections[section].emplace(key, std::move(entry));
    if (!inserted)
      raw.fail(lineno, "duplicate key '" + key + "' in section [" + section +
                           "] (first at line " +
                           std::to_string(it->second.line) + ")");
  }
  return raw;
}

int parse_int(const RawConfig& raw, const Entry& e, const std::string& what) {
  int v = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc{} || p != e.value.data() + e.value.size())
    raw.fail(e.line, what + ": expected an integer, got '" + e.value + "'");
  return v;
}

std::uint64_t parse_u64(const RawConfig& raw, const Entry& e,
                        const std::string& what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc{} || p != e.value.data() + e.value.size())
    raw.fail(e.line, what + ": expected a non-negative integer, got '" +
                         e.value + "'");
  return v;
}

double parse_double(const RawConfig& raw, const std::string& token, int line,
                    const std::string& what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || p != token.data() + token.size())
    raw.fail(line, what + ": expected a number, got '" + token + "'");
  return v;
}

bool parse_bool(const RawConfig& raw, const Entry& e, const std::string& what) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  raw.fail(e.line, what + ": expected true or false, got '" + e.value + "'");
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(value);
  while (std::getline(in, token, sep)) out.push_back(trim(token));
  if (!value.empty() && value.back() == sep) out.push_back("");
  return out;
}

std::vector<double> parse_doubles(const RawConfig& raw, const Entry& e,
                                  const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : split_list(e.value, ','))
    out.push_back(parse_double(raw, tok, e.line, what));
  return out;
}

std::vector<int> parse_ints(const RawConfig& raw, const Entry& e,
                            const std::string& what) {
  std::vector<int> out;
  for (const std::string& tok : split_list(e.value, ',')) {
    Entry one{tok, e.line, false, true};
    out.push_back(parse_int(raw, one, what));
  }
  return out;
}

// A single entry stands for every axis; otherwise exactly one per axis.
template <typename T>
std::vector<T> replicated(const RawConfig& raw, std::vector<T> values,
                          int want, int line, const std::string& what) {
  if (static_cast<int>(values.size()) == 1 && want > 1)
    values.assign(static_cast<std::size_t>(want), values[0]);
  if (static_cast<int>(values.size()) != want)
    raw.fail(line, what + ": expected 1 or " + std::to_string(want) +
                       " entries, got " + std::to_string(values.size()));
  return values;
}

expr::Expression parse_expr_entry(const RawConfig& raw, const Entry& e,
                                  const std::string& what) {
  if (!e.quoted)
    raw.fail(e.line, what + ": expression values must be quoted");
  try {
    return expr::parse(e.value);
  } catch (const ParseError& err) {
    raw.fail(e.line, what + ": in \"" + e.value + "\": " + err.what());
  }
}

ControlSet parse_control_set(const RawConfig& raw, const std::string& side,
                             int dim, int samples) {
  const Entry* box = raw.find("game", side + "_box");
  const Entry* pts = raw.find("game", side + "_points");
  if (box && pts)
    raw.fail(pts->line, "give " + side + "_box or " + side +
                            "_points, not both");
  if (box) {
    std::vector<double> vals = parse_doubles(raw, *box, side + "_box");
    if (static_cast<int>(vals.size()) != 2 * dim)
      raw.fail(box->line, side + "_box: expected " + std::to_string(2 * dim) +
                              " numbers (lo,hi per coordinate), got " +
                              std::to_string(vals.size()));
    ControlBoxSpec spec;
    for (int i = 0; i < dim; ++i)
      spec.bounds.push_back({vals[static_cast<std::size_t>(2 * i)],
                             vals[static_cast<std::size_t>(2 * i + 1)]});
    spec.samples_per_axis = samples;
    return sample_control_set(spec);
  }
  if (pts) {
    ControlPointsSpec spec;
    for (const std::string& group : split_list(pts->value, ';')) {
      std::vector<double> point;
      if (!trim(group).empty())
        for (const std::string& tok : split_list(group, ','))
          point.push_back(parse_double(raw, tok, pts->line, side + "_points"));
      if (static_cast<int>(point.size()) != dim)
        raw.fail(pts->line, side + "_points: point '" + group + "' has " +
                                std::to_string(point.size()) +
                                " coordinates, expected " +
                                std::to_string(dim));
      spec.points.push_back(std::move(point));
    }
    if (spec.points.empty())
      raw.fail(pts->line, side + "_points: no points given");
    return sample_control_set(spec);
  }
  raw.fail("[game] needs " + side + "_box or " + side +
           "_points for the inline definition");
}

void parse_game(const RawConfig& raw, RunConfig& cfg) {
  if (raw.sections.find("game") == raw.sections.end())
    raw.fail("missing required section [game]");

  if (const Entry* e = raw.find("game", "m")) {
    cfg.m = parse_int(raw, *e, "m");
    if (cfg.m < 1) raw.fail(e->line, "m must be at least 1");
  }
  if (const Entry* e = raw.find("game", "control_samples")) {
    cfg.control_samples = parse_int(raw, *e, "control_samples");
    if (cfg.control_samples < 1)
      raw.fail(e->line, "control_samples must be at least 1");
  }

  if (const Entry* e = raw.find("game", "catalog")) {
    cfg.catalog = e->value;
    bool ok = std::any_of(catalog_names().begin(), catalog_names().end(),
                          [&](const std::string& n) { return n == cfg.catalog; });
    if (!ok) raw.fail(e->line, "unknown catalog instance '" + cfg.catalog + "'");
    // inline keys make no sense next to a catalog pick
    for (const char* key :
         {"n", "p", "q", "horizon", "running_cost", "terminal_cost", "name"})
      if (const Entry* stray = raw.find("game", key))
        raw.fail(stray->line, std::string("'") + key +
                                  "' conflicts with 'catalog'");
    return;
  }

  GameInstance g;
  if (const Entry* e = raw.find("game", "name")) g.name = e->value;
  g.m = cfg.m;
  if (const Entry* e = raw.find("game", "n")) g.n = parse_int(raw, *e, "n");
  if (const Entry* e = raw.find("game", "p")) g.p = parse_int(raw, *e, "p");
  if (const Entry* e = raw.find("game", "q")) g.q = parse_int(raw, *e, "q");

  const Entry* hor = raw.find("game", "horizon");
  if (!hor) raw.fail("[game] needs 'horizon' for the inline definition");
  g.horizon = replicated(raw, parse_doubles(raw, *hor, "horizon"), cfg.m,
                         hor->line, "horizon");

  const Entry* lc = raw.find("game", "running_cost");
  if (!lc) raw.fail("[game] needs 'running_cost' for the inline definition");
  g.running_cost = parse_expr_entry(raw, *lc, "running_cost");
  const Entry* tc = raw.find("game", "terminal_cost");
  if (!tc) raw.fail("[game] needs 'terminal_cost' for the inline definition");
  g.terminal_cost = parse_expr_entry(raw, *tc, "terminal_cost");

  for (int a = 1; a <= cfg.m; ++a)
    for (int i = 1; i <= g.n; ++i) {
      std::string key = "dynamics_" + std::to_string(a);
      const Entry* e = nullptr;
      if (g.n == 1) e = raw.find("game", key);
      if (!e) {
        key += "_" + std::to_string(i);
        e = raw.find("game", key);
      }
      if (!e) raw.fail("[game] is missing '" + key + "'");
      g.dynamics.push_back(parse_expr_entry(raw, *e, key));
    }

  g.u_set = parse_control_set(raw, "u", g.p, cfg.control_samples);
  g.v_set = parse_control_set(raw, "v", g.q, cfg.control_samples);
  try {
    g.finalize();
  } catch (const InvalidSpecError& e) {
    raw.fail(std::string("[game] definition rejected: ") + e.what());
  }
  cfg.inline_game = std::move(g);
}

void parse_grid(const RawConfig& raw, RunConfig& cfg, int n) {
  if (raw.sections.find("grid") == raw.sections.end())
    raw.fail("missing required section [grid]");
  const Entry* tn = raw.find("grid", "time_nodes");
  if (!tn) raw.fail("[grid] needs 'time_nodes'");
  cfg.time_nodes = replicated(raw, parse_ints(raw, *tn, "time_nodes"), cfg.m,
                              tn->line, "time_nodes");
  const Entry* lo = raw.find("grid", "state_lo");
  const Entry* hi = raw.find("grid", "state_hi");
  const Entry* sn = raw.find("grid", "state_nodes");
  if (!lo || !hi || !sn)
    raw.fail("[grid] needs 'state_lo', 'state_hi' and 'state_nodes'");
  cfg.state_lo = replicated(raw, parse_doubles(raw, *lo, "state_lo"), n,
                            lo->line, "state_lo");
  cfg.state_hi = replicated(raw, parse_doubles(raw, *hi, "state_hi"), n,
                            hi->line, "state_hi");
  cfg.state_nodes = replicated(raw, parse_ints(raw, *sn, "state_nodes"), n,
                               sn->line, "state_nodes");
}

void parse_solver(const RawConfig& raw, RunConfig& cfg) {
  if (const Entry* e = raw.find("solver", "which")) {
    if (e->value == "upper")
      cfg.solver.which = SolveWhich::Upper;
    else if (e->value == "lower")
      cfg.solver.which = SolveWhich::Lower;
    else if (e->value == "both")
      cfg.solver.which = SolveWhich::Both;
    else
      raw.fail(e->line, "which: expected upper, lower or both, got '" +
                            e->value + "'");
  }
  if (const Entry* e = raw.find("solver", "scheme")) cfg.solver.scheme = e->value;
  if (const Entry* e = raw.find("solver", "refinement")) {
    cfg.solver.refinement = parse_int(raw, *e, "refinement");
    if (cfg.solver.refinement < 0)
      raw.fail(e->line, "refinement must be non-negative");
  }
  if (const Entry* e = raw.find("solver", "clamp"))
    cfg.solver.clamp = parse_bool(raw, *e, "clamp");
}

void parse_verify(const RawConfig& raw, RunConfig& cfg) {
  if (const Entry* e = raw.find("verify", "checks")) {
    cfg.verify.checks.clear();
    for (const std::string& name : split_list(e->value, ',')) {
      if (name != "ordering" && name != "dpp" && name != "oracle" &&
          name != "viscosity")
        raw.fail(e->line, "checks: unknown check '" + name + "'");
      if (std::count(cfg.verify.checks.begin(), cfg.verify.checks.end(), name))
        raw.fail(e->line, "checks: '" + name + "' listed twice");
      cfg.verify.checks.push_back(name);
    }
  }
  if (const Entry* e = raw.find("verify", "seed"))
    cfg.verify.seed = parse_u64(raw, *e, "seed");
  if (const Entry* e = raw.find("verify", "test_family")) {
    cfg.verify.test_family = parse_int(raw, *e, "test_family");
    if (cfg.verify.test_family < 0)
      raw.fail(e->line, "test_family must be non-negative");
  }
  if (const Entry* e = raw.find("verify", "box_steps")) {
    cfg.verify.box_steps = replicated(raw, parse_ints(raw, *e, "box_steps"),
                                      cfg.m, e->line, "box_steps");
    for (int s : cfg.verify.box_steps)
      if (s < 1) raw.fail(e->line, "box_steps entries must be at least 1");
  }
  auto tol = [&](const char* key, double& slot) {
    if (const Entry* e = raw.find("verify", key)) {
      slot = parse_double(raw, e->value, e->line, key);
      if (slot < 0.0) raw.fail(e->line, std::string(key) + " must be >= 0");
    }
  };
  tol("dpp_tolerance", cfg.verify.dpp_tolerance);
  tol("oracle_tolerance", cfg.verify.oracle_tolerance);
  tol("ordering_tolerance", cfg.verify.ordering_tolerance);
}

void parse_synthesize(const RawConfig& raw, RunConfig& cfg, int n) {
  if (const Entry* e = raw.find("synthesize", "start_time"))
    cfg.synthesize.start_time = replicated(
        raw, parse_doubles(raw, *e, "start_time"), cfg.m, e->line, "start_time");
  if (const Entry* e = raw.find("synthesize", "start_state"))
    cfg.synthesize.start_state =
        replicated(raw, parse_doubles(raw, *e, "start_state"), n, e->line,
                   "start_state");
  if (const Entry* e = raw.find("synthesize", "kind")) {
    if (e->value == "upper")
      cfg.synthesize.kind = HamiltonianKind::Upper;
    else if (e->value == "lower")
      cfg.synthesize.kind = HamiltonianKind::Lower;
    else
      raw.fail(e->line, "kind: expected upper or lower, got '" + e->value + "'");
  }
}

void parse_output(const RawConfig& raw, RunConfig& cfg) {
  if (const Entry* e = raw.find("output", "dir")) cfg.output.dir = e->value;
  if (const Entry* e = raw.find("output", "components"))
    cfg.output.components = parse_bool(raw, *e, "components");
}

}  // namespace

std::string RunConfig::hash() const { return io::hash_hex(io::fnv1a64(text)); }

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RawConfig raw = tokenize(text, origin);
  RunConfig cfg;
  cfg.origin = origin;
  cfg.text = text;
  parse_game(raw, cfg);
  const int n = cfg.catalog.empty() ? cfg.inline_game.n : 1;
  parse_grid(raw, cfg, n);
  parse_solver(raw, cfg);
  parse_verify(raw, cfg);
  parse_synthesize(raw, cfg, n);
  parse_output(raw, cfg);
  raw.check_all_used();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

GameInstance config_instance(const RunConfig& cfg) {
  if (!cfg.catalog.empty())
    return catalog_instance(cfg.catalog, cfg.m, cfg.control_samples);
  return cfg.inline_game;
}

MultitimeGrid config_grid(const RunConfig& cfg, const GameInstance& game) {
  std::vector<Axis> time_axes, state_axes;
  for (int a = 0; a < game.m; ++a)
    time_axes.push_back(Axis{0.0, game.horizon[static_cast<std::size_t>(a)],
                             cfg.time_nodes[static_cast<std::size_t>(a)]});
  for (int i = 0; i < game.n; ++i)
    state_axes.push_back(Axis{cfg.state_lo[static_cast<std::size_t>(i)],
                              cfg.state_hi[static_cast<std::size_t>(i)],
                              cfg.state_nodes[static_cast<std::size_t>(i)]});
  return MultitimeGrid(std::move(time_axes), std::move(state_axes));
}

}  // namespace mtg
