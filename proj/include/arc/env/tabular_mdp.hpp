#pragma once

#include <cmath>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/core/rng.hpp"

namespace arc {

/// Finite MDP with dense transition tensor P[s][a][s'] and reward table r[s][a].
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // index (s * n_actions + a) * n_states + s'
  std::vector<double> reward;      // index s * n_actions + a
  double gamma = 0.9;
  std::vector<bool> terminal_mask;

  TabularMDP() = default;
  TabularMDP(int states, int actions, double discount)
      : n_states(states),
        n_actions(actions),
        transition(static_cast<std::size_t>(states) * actions * states, 0.0),
        reward(static_cast<std::size_t>(states) * actions, 0.0),
        gamma(discount),
        terminal_mask(static_cast<std::size_t>(states), false) {
    require(states > 0 && actions > 0, "TabularMDP: need at least one state and one action");
  }

  double& p(int s, int a, int s_next) {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
  }
  double p(int s, int a, int s_next) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
  }
  double& r(int s, int a) { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

  double max_abs_reward() const {
    double m = 0.0;
    for (double v : reward) m = std::max(m, std::abs(v));
    return m;
  }

  /// Throws ContractViolation on any broken invariant.
  void validate() const {
    require(gamma >= 0.0 && gamma < 1.0, "TabularMDP: gamma must lie in [0, 1)");
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
          require(p(s, a, s2) >= 0.0, "TabularMDP: negative transition probability");
          sum += p(s, a, s2);
        }
        require(std::abs(sum - 1.0) <= 1e-12, "TabularMDP: transition row does not sum to 1");
      }
      if (terminal_mask[static_cast<std::size_t>(s)]) {
        for (int a = 0; a < n_actions; ++a) {
          require(p(s, a, s) == 1.0, "TabularMDP: terminal state must self-loop");
          require(r(s, a) == 0.0, "TabularMDP: terminal state must have zero reward");
        }
      }
    }
  }
};

struct GridCell {
  int x = 0;
  int y = 0;
};

enum class GridAction : int { left = 0, right = 1, up = 2, down = 3 };

/// Deterministic grid world. State index is y * width + x; "up" decreases y.
/// Any action that enters the goal earns 1; the goal is absorbing.
inline TabularMDP make_gridworld(int width, int height, GridCell goal, double gamma = 0.9) {
  require(width >= 1 && height >= 1 && width * height >= 2, "make_gridworld: grid needs at least two cells");
  require(goal.x >= 0 && goal.x < width && goal.y >= 0 && goal.y < height, "make_gridworld: goal out of bounds");
  const int n = width * height;
  TabularMDP mdp(n, 4, gamma);
  const int goal_index = goal.y * width + goal.x;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int s = y * width + x;
      if (s == goal_index) {
        mdp.terminal_mask[static_cast<std::size_t>(s)] = true;
        for (int a = 0; a < 4; ++a) mdp.p(s, a, s) = 1.0;
        continue;
      }
      constexpr int dx[4] = {-1, 1, 0, 0};
      constexpr int dy[4] = {0, 0, -1, 1};
      for (int a = 0; a < 4; ++a) {
        int nx = x + dx[a], ny = y + dy[a];
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) {
          nx = x;
          ny = y;
        }
        const int s2 = ny * width + nx;
        mdp.p(s, a, s2) = 1.0;
        if (s2 == goal_index) mdp.r(s, a) = 1.0;
      }
    }
  }
  return mdp;
}

/// The default grid of the tabular suite: 5x5, goal in the bottom-right corner.
inline TabularMDP default_gridworld() { return make_gridworld(5, 5, GridCell{4, 4}, 0.9); }

/// Dense random MDP: Dirichlet-like transition rows, rewards uniform in [-1, 1].
inline TabularMDP make_random_mdp(int n_states, int n_actions, double gamma, Rng& rng) {
  TabularMDP mdp(n_states, n_actions, gamma);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double w = -std::log(rng.uniform(1e-12, 1.0));
        mdp.p(s, a, s2) = w;
        sum += w;
      }
      for (int s2 = 0; s2 < n_states; ++s2) mdp.p(s, a, s2) /= sum;
      // Put rounding residue on the largest entry so rows sum to 1 to ~1 ulp.
      double total = 0.0;
      int argmax = 0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        total += mdp.p(s, a, s2);
        if (mdp.p(s, a, s2) > mdp.p(s, a, argmax)) argmax = s2;
      }
      mdp.p(s, a, argmax) += 1.0 - total;
      mdp.r(s, a) = rng.uniform(-1.0, 1.0);
    }
  }
  return mdp;
}

}  // namespace arc
