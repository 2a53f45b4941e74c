#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/env/tabular_mdp.hpp"

namespace arc {

enum class CriticKind { Q, C };

/// pi[s][a], row-stochastic.
struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;

  TabularPolicy() = default;
  TabularPolicy(int states, int actions) : n_states(states), n_actions(actions), probs(static_cast<std::size_t>(states) * actions, 0.0) {}

  static TabularPolicy uniform(int states, int actions) {
    TabularPolicy p(states, actions);
    std::fill(p.probs.begin(), p.probs.end(), 1.0 / actions);
    return p;
  }

  double& operator()(int s, int a) { return probs[static_cast<std::size_t>(s) * n_actions + a]; }
  double operator()(int s, int a) const { return probs[static_cast<std::size_t>(s) * n_actions + a]; }

  /// Index of the action with probability 1, or -1 when the row is stochastic.
  int greedy_action(int s) const {
    for (int a = 0; a < n_actions; ++a)
      if ((*this)(s, a) == 1.0) return a;
    return -1;
  }

  bool operator==(const TabularPolicy&) const = default;
};

struct ValueTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;
  CriticKind kind = CriticKind::C;

  ValueTable() = default;
  ValueTable(int states, int actions, CriticKind k)
      : n_states(states), n_actions(actions), values(static_cast<std::size_t>(states) * actions, 0.0), kind(k) {}

  double& operator()(int s, int a) { return values[static_cast<std::size_t>(s) * n_actions + a]; }
  double operator()(int s, int a) const { return values[static_cast<std::size_t>(s) * n_actions + a]; }
};

struct PolicyEvaluation {
  ValueTable table;
  /// Sup-norm distance between successive iterates, one entry per backup.
  std::vector<double> residual_history;
};

/// Entries within this distance of the best value count as tied; ties go to
/// the lowest action index. Must exceed the evaluation error so that the C and
/// Q routes resolve analytic ties identically.
inline constexpr double kGreedyTieTolerance = 1e-8;
inline constexpr double kDefaultEvalTolerance = 1e-10;

namespace dp_detail {

inline void check_inputs(const TabularMDP& mdp, const TabularPolicy& policy, double tol) {
  require(mdp.gamma >= 0.0 && mdp.gamma < 1.0, "policy evaluation: gamma must lie in [0, 1)");
  require(tol > 0.0, "policy evaluation: tol must be positive");
  require(policy.n_states == mdp.n_states && policy.n_actions == mdp.n_actions,
          "policy evaluation: policy shape does not match the MDP");
}

// One backup for either critic. For C the reward enters at the successor
// pair; for Q it is the current pair's reward.
inline ValueTable backup(const TabularMDP& mdp, const TabularPolicy& pi, const ValueTable& cur) {
  ValueTable next(mdp.n_states, mdp.n_actions, cur.kind);
  // Successor-state value under pi.
  std::vector<double> succ(static_cast<std::size_t>(mdp.n_states), 0.0);
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    double v = 0.0;
    for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
      const double w = pi(s2, a2);
      if (w == 0.0) continue;
      v += w * (cur.kind == CriticKind::C ? mdp.r(s2, a2) + cur(s2, a2) : cur(s2, a2));
    }
    succ[static_cast<std::size_t>(s2)] = v;
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double expect = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) expect += mdp.p(s, a, s2) * succ[static_cast<std::size_t>(s2)];
      next(s, a) = (cur.kind == CriticKind::C ? 0.0 : mdp.r(s, a)) + mdp.gamma * expect;
    }
  }
  return next;
}

// gamma * sum_s' P(s'|s,a) sum_a' pi(a'|s') t(s',a'), the backup without reward.
inline ValueTable propagate(const TabularMDP& mdp, const TabularPolicy& pi, const ValueTable& t) {
  ValueTable next(mdp.n_states, mdp.n_actions, t.kind);
  std::vector<double> succ(static_cast<std::size_t>(mdp.n_states), 0.0);
  for (int s2 = 0; s2 < mdp.n_states; ++s2)
    for (int a2 = 0; a2 < mdp.n_actions; ++a2) succ[static_cast<std::size_t>(s2)] += pi(s2, a2) * t(s2, a2);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      double expect = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) expect += mdp.p(s, a, s2) * succ[static_cast<std::size_t>(s2)];
      next(s, a) = mdp.gamma * expect;
    }
  return next;
}

inline PolicyEvaluation evaluate(const TabularMDP& mdp, const TabularPolicy& policy, double tol, CriticKind kind,
                                 const ValueTable* init) {
  check_inputs(mdp, policy, tol);
  PolicyEvaluation out;
  out.table = init ? *init : ValueTable(mdp.n_states, mdp.n_actions, kind);
  out.table.kind = kind;
  require(out.table.n_states == mdp.n_states && out.table.n_actions == mdp.n_actions,
          "policy evaluation: initial table shape mismatch");
  // Residual d bounds the distance to the fixed point by d * gamma / (1 - gamma).
  const double amplification = mdp.gamma / (1.0 - mdp.gamma);
  // The increments obey the reward-free recursion delta <- gamma P_pi delta,
  // so they are carried directly instead of being recovered by subtracting
  // two nearly equal tables.
  ValueTable delta = backup(mdp, policy, out.table);
  for (std::size_t i = 0; i < delta.values.size(); ++i) delta.values[i] -= out.table.values[i];
  for (;;) {
    double residual = 0.0;
    for (double d : delta.values) residual = std::max(residual, std::abs(d));
    out.residual_history.push_back(residual);
    for (std::size_t i = 0; i < delta.values.size(); ++i) out.table.values[i] += delta.values[i];
    if (residual * amplification < tol && residual < tol) break;
    if (!std::isfinite(residual)) throw NumericalError("policy evaluation diverged");
    delta = propagate(mdp, policy, delta);
  }
  return out;
}

}  // namespace dp_detail

/// Iterates C <- gamma * sum_s' P(s'|s,a) sum_a' pi(a'|s') (r(s',a') + C(s',a'))
/// until the guaranteed sup-norm error to the fixed point is below tol.
inline PolicyEvaluation evaluate_c(const TabularMDP& mdp, const TabularPolicy& policy,
                                   double tol = kDefaultEvalTolerance, const ValueTable* init = nullptr) {
  return dp_detail::evaluate(mdp, policy, tol, CriticKind::C, init);
}

/// Iterates Q <- r + gamma * sum_s' P(s'|s,a) sum_a' pi(a'|s') Q(s',a').
inline PolicyEvaluation evaluate_q(const TabularMDP& mdp, const TabularPolicy& policy,
                                   double tol = kDefaultEvalTolerance, const ValueTable* init = nullptr) {
  return dp_detail::evaluate(mdp, policy, tol, CriticKind::Q, init);
}

/// Upper bound on backups needed from an initial error bound `initial_bound`.
inline long evaluation_iteration_bound(double gamma, double tol, double initial_bound) {
  if (gamma == 0.0 || initial_bound <= 0.0) return 1;
  return static_cast<long>(std::ceil(std::log(tol * (1.0 - gamma) / initial_bound) / std::log(gamma)));
}

namespace dp_detail {

template <class ScoreFn>
TabularPolicy greedy(int n_states, int n_actions, ScoreFn score) {
  TabularPolicy pi(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) best = std::max(best, score(s, a));
    for (int a = 0; a < n_actions; ++a) {
      if (score(s, a) >= best - kGreedyTieTolerance) {
        pi(s, a) = 1.0;
        break;
      }
    }
  }
  return pi;
}

}  // namespace dp_detail

/// Deterministic greedy policy over r(s,a) + C(s,a).
inline TabularPolicy improve_from_c(const TabularMDP& mdp, const ValueTable& c) {
  require(c.kind == CriticKind::C, "improve_from_c: table must be a C table");
  return dp_detail::greedy(mdp.n_states, mdp.n_actions, [&](int s, int a) { return mdp.r(s, a) + c(s, a); });
}

/// Deterministic greedy policy over Q(s,a).
inline TabularPolicy improve_from_q(const TabularMDP& mdp, const ValueTable& q) {
  require(q.kind == CriticKind::Q, "improve_from_q: table must be a Q table");
  return dp_detail::greedy(mdp.n_states, mdp.n_actions, [&](int s, int a) { return q(s, a); });
}

/// Mean over states of the policy's state value, computed from either table.
inline double mean_state_value(const TabularMDP& mdp, const TabularPolicy& pi, const ValueTable& t) {
  double total = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      total += pi(s, a) * (t.kind == CriticKind::C ? mdp.r(s, a) + t(s, a) : t(s, a));
  return total / mdp.n_states;
}

struct PolicyIterationOptions {
  double tol = kDefaultEvalTolerance;
  std::optional<ValueTable> initial_values;   // zeros when absent
  std::optional<TabularPolicy> initial_policy;  // uniform when absent
  int max_improvements = 10000;
};

struct PolicyIterationResult {
  TabularPolicy policy;
  ValueTable values;
  int improvement_steps = 0;
  /// Every evaluation's residual sequence, concatenated.
  std::vector<double> residual_history;
  /// Mean state value of the policy evaluated at each iteration.
  std::vector<double> value_history;
};

/// Evaluate / improve until the greedy policy stops changing. Evaluations are
/// warm-started from the previous table.
inline PolicyIterationResult policy_iteration(const TabularMDP& mdp, CriticKind kind,
                                              const PolicyIterationOptions& opts = {}) {
  mdp.validate();
  PolicyIterationResult out;
  TabularPolicy pi = opts.initial_policy ? *opts.initial_policy : TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
  std::optional<ValueTable> warm = opts.initial_values;
  if (warm) warm->kind = kind;
  for (;;) {
    PolicyEvaluation ev = kind == CriticKind::C ? evaluate_c(mdp, pi, opts.tol, warm ? &*warm : nullptr)
                                                : evaluate_q(mdp, pi, opts.tol, warm ? &*warm : nullptr);
    out.residual_history.insert(out.residual_history.end(), ev.residual_history.begin(), ev.residual_history.end());
    out.value_history.push_back(mean_state_value(mdp, pi, ev.table));
    TabularPolicy next = kind == CriticKind::C ? improve_from_c(mdp, ev.table) : improve_from_q(mdp, ev.table);
    ++out.improvement_steps;
    warm = std::move(ev.table);
    if (next == pi || out.improvement_steps >= opts.max_improvements) {
      out.policy = std::move(next);
      out.values = std::move(*warm);
      return out;
    }
    pi = std::move(next);
  }
}

}  // namespace arc
