#include "mtg/hamiltonian.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace mtg {
namespace {

std::string point_to_string(const std::vector<double>& v) {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    std::snprintf(buf, sizeof buf, "%g", v[i]);
    s += buf;
  }
  s += ")";
  return s;
}

void check_vector(const char* what, const std::vector<double>& v, int want) {
  if (static_cast<int>(v.size()) != want)
    throw InvalidSpecError(std::string(what) + " has wrong dimension");
}

void check_costate(const std::vector<std::vector<double>>& p, int m, int n) {
  if (static_cast<int>(p.size()) != m)
    throw InvalidSpecError("costate needs one row per time axis");
  for (const auto& row : p)
    if (static_cast<int>(row.size()) != n)
      throw InvalidSpecError("costate row has wrong dimension");
}

}  // namespace

HamiltonianEvaluator::HamiltonianEvaluator(const GameInstance& instance)
    : game_(&instance),
      env_(static_cast<std::size_t>(instance.env_size()), 0.0) {
  if (instance.running_cost_c.empty())
    throw InvalidSpecError("game instance must be finalized first");
}

void HamiltonianEvaluator::bind_point(const std::vector<double>& t,
                                      const std::vector<double>& x) {
  check_vector("t", t, game_->m);
  check_vector("x", x, game_->n);
  for (int a = 0; a < game_->m; ++a)
    env_[static_cast<std::size_t>(game_->t_slot() + a)] = t[static_cast<std::size_t>(a)];
  for (int i = 0; i < game_->n; ++i)
    env_[static_cast<std::size_t>(game_->x_slot() + i)] = x[static_cast<std::size_t>(i)];
}

void HamiltonianEvaluator::bind_u(const std::vector<double>& u) {
  for (int c = 0; c < game_->p; ++c)
    env_[static_cast<std::size_t>(game_->u_slot() + c)] = u[static_cast<std::size_t>(c)];
}

void HamiltonianEvaluator::bind_v(const std::vector<double>& v) {
  for (int c = 0; c < game_->q; ++c)
    env_[static_cast<std::size_t>(game_->v_slot() + c)] = v[static_cast<std::size_t>(c)];
}

double HamiltonianEvaluator::objective(const std::vector<double>& t,
                                       const std::vector<double>& x,
                                       std::size_t u_idx, std::size_t v_idx,
                                       const std::vector<std::vector<double>>& p) {
  bind_point(t, x);
  check_costate(p, game_->m, game_->n);
  bind_u(game_->u_set.point(u_idx));
  bind_v(game_->v_set.point(v_idx));
  double acc = game_->running_cost_c.eval(env_);
  for (int a = 0; a < game_->m; ++a)
    for (int i = 0; i < game_->n; ++i) {
      const double pai = p[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
      if (pai != 0.0) acc += pai * game_->dynamic_c(a, i).eval(env_);
    }
  return acc;
}

SaddleResult HamiltonianEvaluator::saddle(HamiltonianKind kind,
                                          const std::vector<double>& t,
                                          const std::vector<double>& x,
                                          const std::vector<std::vector<double>>& p) {
  bind_point(t, x);
  check_costate(p, game_->m, game_->n);
  const ControlSet& outer = kind == HamiltonianKind::Upper ? game_->v_set : game_->u_set;
  const ControlSet& inner = kind == HamiltonianKind::Upper ? game_->u_set : game_->v_set;
  if (outer.size() == 0 || inner.size() == 0)
    throw InvalidSpecError("control sets must be non-empty");

  SaddleResult best;
  best.which = kind;
  bool have_outer = false;
  std::size_t best_outer = 0, best_inner = 0;

  for (std::size_t o = 0; o < outer.size(); ++o) {
    if (kind == HamiltonianKind::Upper) bind_v(outer.point(o));
    else bind_u(outer.point(o));

    double inner_best = 0.0;
    std::size_t inner_arg = 0;
    bool have_inner = false;
    for (std::size_t in = 0; in < inner.size(); ++in) {
      if (kind == HamiltonianKind::Upper) bind_u(inner.point(in));
      else bind_v(inner.point(in));

      double val = game_->running_cost_c.eval(env_);
      for (int a = 0; a < game_->m; ++a)
        for (int i = 0; i < game_->n; ++i) {
          const double pai = p[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
          if (pai != 0.0) val += pai * game_->dynamic_c(a, i).eval(env_);
        }
      if (!std::isfinite(val)) {
        const std::vector<double>& up =
            kind == HamiltonianKind::Upper ? inner.point(in) : outer.point(o);
        const std::vector<double>& vp =
            kind == HamiltonianKind::Upper ? outer.point(o) : inner.point(in);
        throw NumericError("non-finite Hamiltonian objective at u=" +
                           point_to_string(up) + ", v=" + point_to_string(vp));
      }
      // inner optimizes against the outer choice: max for Upper, min for
      // Lower; strict comparison keeps the first index on ties
      const bool better = kind == HamiltonianKind::Upper ? val > inner_best
                                                         : val < inner_best;
      if (!have_inner || better) {
        inner_best = val;
        inner_arg = in;
        have_inner = true;
      }
    }

    const bool better = kind == HamiltonianKind::Upper ? inner_best < best.value
                                                       : inner_best > best.value;
    if (!have_outer || better) {
      best.value = inner_best;
      best_outer = o;
      best_inner = inner_arg;
      have_outer = true;
    }
  }

  if (kind == HamiltonianKind::Upper) {
    best.v_index = best_outer;
    best.u_index = best_inner;
  } else {
    best.u_index = best_outer;
    best.v_index = best_inner;
  }
  best.arg_u = game_->u_set.point(best.u_index);
  best.arg_v = game_->v_set.point(best.v_index);
  return best;
}

double HamiltonianEvaluator::lambda(const std::vector<double>& t,
                                    const std::vector<double>& x,
                                    const std::vector<double>& u,
                                    const std::vector<double>& v,
                                    const std::vector<std::vector<double>>& w_grad_x,
                                    double w_div_t) {
  bind_point(t, x);
  check_vector("u", u, game_->p);
  check_vector("v", v, game_->q);
  check_costate(w_grad_x, game_->m, game_->n);
  bind_u(u);
  bind_v(v);
  double acc = game_->running_cost_c.eval(env_) + w_div_t;
  for (int a = 0; a < game_->m; ++a)
    for (int i = 0; i < game_->n; ++i) {
      const double w = w_grad_x[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
      if (w != 0.0) acc += w * game_->dynamic_c(a, i).eval(env_);
    }
  if (!std::isfinite(acc))
    throw NumericError("non-finite Lambda at u=" + point_to_string(u) +
                       ", v=" + point_to_string(v));
  return acc;
}

SaddleResult upper_hamiltonian(const GameInstance& instance,
                               const std::vector<double>& t,
                               const std::vector<double>& x,
                               const std::vector<std::vector<double>>& p) {
  HamiltonianEvaluator ev(instance);
  return ev.saddle(HamiltonianKind::Upper, t, x, p);
}

SaddleResult lower_hamiltonian(const GameInstance& instance,
                               const std::vector<double>& t,
                               const std::vector<double>& x,
                               const std::vector<std::vector<double>>& p) {
  HamiltonianEvaluator ev(instance);
  return ev.saddle(HamiltonianKind::Lower, t, x, p);
}

double isaacs_gap(const GameInstance& instance, const std::vector<double>& t,
                  const std::vector<double>& x,
                  const std::vector<std::vector<double>>& p) {
  HamiltonianEvaluator ev(instance);
  return ev.saddle(HamiltonianKind::Upper, t, x, p).value -
         ev.saddle(HamiltonianKind::Lower, t, x, p).value;
}

double lambda_form(const GameInstance& instance, const std::vector<double>& t,
                   const std::vector<double>& x, const std::vector<double>& u,
                   const std::vector<double>& v,
                   const std::vector<std::vector<double>>& w_grad_x,
                   double w_div_t) {
  HamiltonianEvaluator ev(instance);
  return ev.lambda(t, x, u, v, w_grad_x, w_div_t);
}

StrategyMap covering_strategy(const GameInstance& instance,
                              const std::vector<double>& t,
                              const std::vector<double>& x,
                              const std::vector<std::vector<double>>& w_grad_x,
                              double w_div_t, double theta) {
  if (!(theta > 0.0))
    throw InvalidSpecError("covering strategy needs theta > 0");
  HamiltonianEvaluator ev(instance);
  const ControlSet& us = instance.u_set;
  const ControlSet& vs = instance.v_set;
  if (us.size() == 0 || vs.size() == 0)
    throw InvalidSpecError("control sets must be non-empty");

  StrategyMap out;
  out.theta = theta;
  out.u_index_for_v.reserve(vs.size());
  bool have_margin = false;
  for (std::size_t vi = 0; vi < vs.size(); ++vi) {
    double best = 0.0;
    std::size_t arg = 0;
    for (std::size_t ui = 0; ui < us.size(); ++ui) {
      const double val = ev.lambda(t, x, us.point(ui), vs.point(vi), w_grad_x, w_div_t);
      if (ui == 0 || val > best) {
        best = val;
        arg = ui;
      }
    }
    if (best < theta)
      throw HypothesisError("margin hypothesis fails at v=" +
                            point_to_string(vs.point(vi)) + ": max_u Lambda = " +
                            std::to_string(best) + " < theta");
    out.u_index_for_v.push_back(arg);
    if (!have_margin || best < out.margin) {
      out.margin = best;
      have_margin = true;
    }
  }
  return out;
}

}  // namespace mtg
