#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "arc/agents/policy.hpp"
#include "arc/core/errors.hpp"
#include "arc/core/rng.hpp"
#include "arc/env/continuous.hpp"

namespace arc {

struct ReturnStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over episodes
};

inline ReturnStats return_stats(const std::vector<double>& returns) {
  ReturnStats s;
  if (returns.empty()) return s;
  const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
  if (*lo == *hi) return {*lo, 0.0};  // the summed mean would pick up rounding
  for (double r : returns) s.mean += r;
  s.mean /= static_cast<double>(returns.size());
  for (double r : returns) s.std += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(returns.size()));
  return s;
}

/// Undiscounted environment return of `act` over n episodes. Episode i resets
/// with its own generator derived from (seed, i).
inline ReturnStats evaluate_controller(const ContinuousEnv& env_proto,
                                       const std::function<std::vector<double>(std::span<const double>)>& act,
                                       int n_episodes, std::uint64_t seed) {
  require(n_episodes >= 1, "evaluate: n_episodes must be at least 1");
  std::vector<double> returns;
  for (int i = 0; i < n_episodes; ++i) {
    auto env = env_proto.clone();
    Rng rng(derive_seed(seed, Stream::eval, static_cast<std::uint64_t>(i)));
    std::vector<double> s = env->reset(rng);
    double total = 0.0;
    while (!env->episode_over()) {
      const Transition tr = env->step(act(s));
      total += tr.reward_env;
      s = tr.next_state;
    }
    returns.push_back(total);
  }
  return return_stats(returns);
}

/// Deterministic-policy evaluation: actions are scale * tanh(mean(s)).
inline ReturnStats evaluate_policy(const SquashedGaussianPolicy& policy, const ContinuousEnv& env_proto, int n_episodes,
                                   std::uint64_t seed) {
  Rng unused(0);
  return evaluate_controller(
      env_proto, [&](std::span<const double> s) { return policy.sample_action(s, true, unused).first; }, n_episodes,
      seed);
}

}  // namespace arc
