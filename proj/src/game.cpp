#include "mtg/game.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mtg {

namespace {

void append_axis_samples(const ControlBoxSpec& box, std::size_t axis,
                         std::vector<double>& out) {
  double lo = box.bounds[axis][0];
  double hi = box.bounds[axis][1];
  int k = box.samples_per_axis;
  out.clear();
  if (k == 1) {
    out.push_back(0.5 * (lo + hi));
    return;
  }
  double step = (hi - lo) / static_cast<double>(k - 1);
  for (int j = 0; j < k; ++j) {
    out.push_back(j + 1 == k ? hi : lo + step * j);
  }
}

}  // namespace

ControlSet sample_control_set(const ControlSetSpec& spec) {
  ControlSet out;
  out.spec_ = spec;
  if (const auto* box = std::get_if<ControlBoxSpec>(&spec)) {
    if (box->samples_per_axis < 1) {
      throw InvalidSpecError("control box needs samples_per_axis >= 1");
    }
    for (const auto& b : box->bounds) {
      if (!(b[0] <= b[1])) {
        throw InvalidSpecError("control box has lo > hi");
      }
    }
    out.dim_ = static_cast<int>(box->bounds.size());
    // Lexicographic enumeration: axis 0 most significant.
    std::vector<std::vector<double>> axis_samples(box->bounds.size());
    for (std::size_t a = 0; a < box->bounds.size(); ++a) {
      append_axis_samples(*box, a, axis_samples[a]);
    }
    std::vector<std::size_t> idx(box->bounds.size(), 0);
    bool done = false;
    while (!done) {
      std::vector<double> pt(box->bounds.size());
      for (std::size_t a = 0; a < idx.size(); ++a) {
        pt[a] = axis_samples[a][idx[a]];
      }
      out.points_.push_back(std::move(pt));
      done = true;
      for (std::size_t a = idx.size(); a-- > 0;) {  // last axis fastest
        if (++idx[a] < axis_samples[a].size()) {
          done = false;
          break;
        }
        idx[a] = 0;
      }
    }
  } else {
    const auto& pts = std::get<ControlPointsSpec>(spec).points;
    if (pts.empty()) {
      throw InvalidSpecError("explicit control set must be non-empty");
    }
    out.dim_ = static_cast<int>(pts.front().size());
    for (const auto& pt : pts) {
      if (static_cast<int>(pt.size()) != out.dim_) {
        throw InvalidSpecError("explicit control points have mixed dimensions");
      }
    }
    out.points_ = pts;
  }
  // Drop exact duplicates, keeping first occurrences.
  std::vector<std::vector<double>> unique;
  for (auto& pt : out.points_) {
    if (std::find(unique.begin(), unique.end(), pt) == unique.end()) {
      unique.push_back(pt);
    }
  }
  out.points_ = std::move(unique);
  return out;
}

ControlSet ControlSet::with_spacing_halved() const {
  if (const auto* box = std::get_if<ControlBoxSpec>(&spec_)) {
    ControlBoxSpec refined = *box;
    if (refined.samples_per_axis >= 2) {
      refined.samples_per_axis = refined.samples_per_axis * 2 - 1;
    }
    return sample_control_set(refined);
  }
  return *this;
}

void GameInstance::finalize() {
  if (m < 1 || n < 1 || p < 0 || q < 0) {
    throw InvalidSpecError("instance dimensions must satisfy m>=1, n>=1, p,q>=0");
  }
  if (static_cast<int>(horizon.size()) != m) {
    throw InvalidSpecError("horizon must have one entry per time axis");
  }
  for (double T : horizon) {
    if (!(T > 0.0)) throw InvalidSpecError("horizon entries must be positive");
  }
  if (static_cast<int>(dynamics.size()) != m * n) {
    throw InvalidSpecError("dynamics must have m*n entries");
  }
  if (u_set.dim() != p || v_set.dim() != q) {
    throw InvalidSpecError("control set dimension does not match p/q");
  }
  if (u_set.size() == 0 || v_set.size() == 0) {
    throw InvalidSpecError("control sets must be non-empty");
  }

  layout = expr::VarLayout::for_game(m, n, p, q);
  std::set<std::string> legal(layout.names().begin(), layout.names().end());
  std::set<std::string> state_only;
  for (int i = 1; i <= n; ++i) state_only.insert("x" + std::to_string(i));

  auto check_vars = [&](const expr::Expression& e, const std::set<std::string>& allowed,
                        const char* what) {
    for (const auto& var : e.variables()) {
      if (!allowed.count(var)) {
        std::ostringstream msg;
        msg << what << " references illegal variable '" << var << "'";
        throw InvalidSpecError(msg.str());
      }
    }
  };
  check_vars(running_cost, legal, "running cost");
  check_vars(terminal_cost, state_only, "terminal cost");
  for (const auto& X : dynamics) check_vars(X, legal, "dynamics");

  dynamics_c.clear();
  dynamics_c.reserve(dynamics.size());
  for (const auto& X : dynamics) dynamics_c.push_back(expr::compile(X, layout));
  running_cost_c = expr::compile(running_cost, layout);
  terminal_cost_c = expr::compile(terminal_cost, layout);
}

namespace {

GameInstance base_instance(const std::string& name, int m) {
  GameInstance g;
  g.name = name;
  g.m = m;
  g.horizon.assign(static_cast<std::size_t>(m), 1.0);
  return g;
}

}  // namespace

GameInstance catalog_instance(const std::string& name, int m, int k) {
  if (m < 1) throw InvalidSpecError("catalog instances need m >= 1");
  if (k < 1) throw InvalidSpecError("catalog instances need k >= 1");

  if (name == "remark1") {
    GameInstance g = base_instance(name, m);
    g.n = 1;
    g.p = 1;
    g.q = 1;
    g.running_cost = expr::parse("(x1+v1)^2 - u1^2");
    g.terminal_cost = expr::parse("0");
    g.dynamics.assign(static_cast<std::size_t>(m), expr::parse("u1+v1"));
    g.u_set = sample_control_set(ControlBoxSpec{{{-1.0, 1.0}}, k});
    g.v_set = sample_control_set(ControlBoxSpec{{{-2.0, 2.0}}, k});
    g.benchmark.value = 0.0;
    g.benchmark.note = "saddle u=0, v=-x1; value 0 everywhere";
    g.finalize();
    return g;
  }
  if (name == "remark2") {
    GameInstance g = base_instance(name, m);
    g.n = 1;
    g.p = m;  // one u component per time axis
    g.q = 0;
    std::ostringstream L;
    for (int a = 1; a <= m; ++a) {
      if (a > 1) L << " + ";
      L << "(t" << a << "+u" << a << ")^2";
    }
    g.running_cost = expr::parse(L.str());
    g.terminal_cost = expr::parse("0");
    g.dynamics.assign(static_cast<std::size_t>(m), expr::parse("0"));
    ControlBoxSpec ubox;
    ubox.bounds.assign(static_cast<std::size_t>(m), {-1.0, 0.0});
    ubox.samples_per_axis = k;
    g.u_set = sample_control_set(ubox);
    g.v_set = sample_control_set(ControlBoxSpec{{}, 1});  // no v controls
    g.benchmark.value = 0.0;
    g.benchmark.note = "payoff 0 at u_a(t) = -t^a";
    g.finalize();
    return g;
  }
  if (name == "bilinear_gap") {
    GameInstance g = base_instance(name, m);
    g.n = 1;
    g.p = 1;
    g.q = 1;
    g.running_cost = expr::parse("u1*v1");
    g.terminal_cost = expr::parse("0");
    g.dynamics.assign(static_cast<std::size_t>(m), expr::parse("0"));
    g.u_set = sample_control_set(ControlPointsSpec{{{-1.0}, {0.0}, {1.0}}});
    g.v_set = sample_control_set(ControlPointsSpec{{{-1.0}, {1.0}}});
    g.benchmark.hamiltonian_gap = 1.0;
    g.benchmark.note = "upper Hamiltonian 1, lower 0 at p=0";
    g.finalize();
    return g;
  }
  if (name == "separable_isaacs") {
    GameInstance g = base_instance(name, m);
    g.n = 1;
    g.p = 1;
    g.q = 1;
    g.running_cost = expr::parse("v1^2 - u1^2 + x1^2");
    g.terminal_cost = expr::parse("x1^2");
    g.dynamics.assign(static_cast<std::size_t>(m), expr::parse("u1 - v1"));
    g.u_set = sample_control_set(ControlBoxSpec{{{-1.0, 1.0}}, k});
    g.v_set = sample_control_set(ControlBoxSpec{{{-2.0, 2.0}}, k});
    g.benchmark.hamiltonian_gap = 0.0;
    g.benchmark.note = "separable objective: min-max equals max-min";
    g.finalize();
    return g;
  }
  throw InvalidSpecError("unknown catalog instance '" + name + "'");
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {
      "remark1", "remark2", "bilinear_gap", "separable_isaacs"};
  return names;
}

GameInstance with_control_spacing_halved(const GameInstance& g) {
  GameInstance out = g;
  out.u_set = g.u_set.with_spacing_halved();
  out.v_set = g.v_set.with_spacing_halved();
  out.finalize();
  return out;
}

GameInstance with_running_cost_offset(const GameInstance& g, double c) {
  GameInstance out = g;
  out.running_cost =
      expr::binary(expr::BinaryOp::Add, g.running_cost, expr::literal(c));
  out.finalize();
  return out;
}

GameInstance with_terminal_cost_offset(const GameInstance& g, double c) {
  GameInstance out = g;
  out.terminal_cost =
      expr::binary(expr::BinaryOp::Add, g.terminal_cost, expr::literal(c));
  out.finalize();
  return out;
}

GameInstance make_zero_game(int m, int n) {
  GameInstance g = base_instance("zero", m);
  g.n = n;
  g.p = 1;
  g.q = 1;
  g.running_cost = expr::parse("0");
  g.terminal_cost = expr::parse("0");
  g.dynamics.assign(static_cast<std::size_t>(m * n), expr::parse("0"));
  g.u_set = sample_control_set(ControlPointsSpec{{{0.0}}});
  g.v_set = sample_control_set(ControlPointsSpec{{{0.0}}});
  g.benchmark.value = 0.0;
  g.finalize();
  return g;
}

}  // namespace mtg
