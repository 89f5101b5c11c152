#pragma once

#include <cstddef>
#include <vector>

#include "mtg/errors.hpp"
#include "mtg/game.hpp"

namespace mtg {

enum class HamiltonianKind { Upper, Lower };

// Saddle of p_i^alpha X_alpha^i + L over the sampled control sets.
// For Upper the value is min over v of max over u; arg_u attains the inner
// max at arg_v and arg_v attains the outer min.  Lower swaps the roles.
// Ties break toward the first sample index.
struct SaddleResult {
  double value = 0.0;
  std::vector<double> arg_u;
  std::vector<double> arg_v;
  std::size_t u_index = 0;
  std::size_t v_index = 0;
  HamiltonianKind which = HamiltonianKind::Upper;
};

// Finite map v-sample -> u-sample answering every opponent choice with a
// guaranteed margin on the form Lambda.
struct StrategyMap {
  std::vector<std::size_t> u_index_for_v;  // one entry per v-sample
  double theta = 0.0;
  double margin = 0.0;  // min over v of Lambda(psi(v), v); >= (3/4) theta
};

// Reusable evaluation workspace.  The free functions below construct one per
// call; hot loops should keep an instance alive.
class HamiltonianEvaluator {
 public:
  explicit HamiltonianEvaluator(const GameInstance& instance);

  const GameInstance& instance() const { return *game_; }

  // p_i^alpha X_alpha^i + L at (t, x) for the given sample indices.
  // p is indexed p[alpha][i].
  double objective(const std::vector<double>& t, const std::vector<double>& x,
                   std::size_t u_idx, std::size_t v_idx,
                   const std::vector<std::vector<double>>& p);

  SaddleResult saddle(HamiltonianKind kind, const std::vector<double>& t,
                      const std::vector<double>& x,
                      const std::vector<std::vector<double>>& p);

  double lambda(const std::vector<double>& t, const std::vector<double>& x,
                const std::vector<double>& u, const std::vector<double>& v,
                const std::vector<std::vector<double>>& w_grad_x,
                double w_div_t);

 private:
  void bind_point(const std::vector<double>& t, const std::vector<double>& x);
  void bind_u(const std::vector<double>& u);
  void bind_v(const std::vector<double>& v);

  const GameInstance* game_;
  std::vector<double> env_;
};

SaddleResult upper_hamiltonian(const GameInstance& instance,
                               const std::vector<double>& t,
                               const std::vector<double>& x,
                               const std::vector<std::vector<double>>& p);
SaddleResult lower_hamiltonian(const GameInstance& instance,
                               const std::vector<double>& t,
                               const std::vector<double>& x,
                               const std::vector<std::vector<double>>& p);

// Upper minus lower Hamiltonian; nonnegative up to rounding.
double isaacs_gap(const GameInstance& instance, const std::vector<double>& t,
                  const std::vector<double>& x,
                  const std::vector<std::vector<double>>& p);

// L + sum_{alpha,i} w_grad_x[alpha][i] X_alpha^i + w_div_t at explicit
// control points (not sample indices).
double lambda_form(const GameInstance& instance, const std::vector<double>& t,
                   const std::vector<double>& x, const std::vector<double>& u,
                   const std::vector<double>& v,
                   const std::vector<std::vector<double>>& w_grad_x,
                   double w_div_t);

// Builds psi: v-sample -> argmax_u Lambda(t,x,u,v).  Requires the margin
// hypothesis min_v max_u Lambda >= theta > 0; throws HypothesisError naming
// the violating v-sample otherwise.  The returned map satisfies
// Lambda(psi(v), v) >= (3/4) theta for every v-sample.
StrategyMap covering_strategy(const GameInstance& instance,
                              const std::vector<double>& t,
                              const std::vector<double>& x,
                              const std::vector<std::vector<double>>& w_grad_x,
                              double w_div_t, double theta);

}  // namespace mtg
