#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <vector>

#include "arc/adversary/reward_model.hpp"
#include "arc/agents/critics.hpp"
#include "arc/agents/policy.hpp"
#include "arc/agents/replay_buffer.hpp"
#include "arc/core/adam.hpp"
#include "arc/core/errors.hpp"

namespace arc {

// ---------------------------------------------------------------- targets

/// y = gamma * (r(s', a~') + min C_targ(s', a~') - alpha log pi(a~'|s')) * (1 - d)
/// with a~' drawn from `noise`. The stored pair's own reward never enters.
inline Eigen::RowVectorXd sarc_c_targets(const TransitionBatch& batch, const RewardModel& reward,
                                         const SquashedGaussianPolicy& policy, const CriticPair& critics, double alpha,
                                         double gamma, const Matrix& noise) {
  require(critics.kind == CriticKind::C, "sarc_c_targets: critics must be C critics");
  const PolicySample next = policy.sample(batch.next_states, noise);
  const Eigen::RowVectorXd r_next = reward.rewards(batch.next_states, next.actions);
  const Eigen::RowVectorXd c_next = critics.min_target(batch.next_states, next.actions);
  const Eigen::RowVectorXd soft = (r_next + c_next).array() - alpha * next.log_prob.array();
  return (gamma * soft.array() * (1.0 - batch.dones.array())).matrix();
}

inline Eigen::RowVectorXd sarc_c_targets(const TransitionBatch& batch, const RewardModel& reward,
                                         const SquashedGaussianPolicy& policy, const CriticPair& critics, double alpha,
                                         double gamma, Rng& rng) {
  return sarc_c_targets(batch, reward, policy, critics, alpha, gamma, policy.standard_normal(rng, batch.size()));
}

/// y = r(s, a) + gamma * (min Q_targ(s', a~') - alpha log pi(a~'|s')) * (1 - d).
inline Eigen::RowVectorXd sac_q_targets(const TransitionBatch& batch, const RewardModel& reward,
                                        const SquashedGaussianPolicy& policy, const CriticPair& critics, double alpha,
                                        double gamma, const Matrix& noise) {
  require(critics.kind == CriticKind::Q, "sac_q_targets: critics must be Q critics");
  const PolicySample next = policy.sample(batch.next_states, noise);
  const Eigen::RowVectorXd r = reward.rewards(batch.states, batch.actions);
  const Eigen::RowVectorXd q_next = critics.min_target(batch.next_states, next.actions);
  const Eigen::RowVectorXd soft = q_next.array() - alpha * next.log_prob.array();
  return (r.array() + gamma * soft.array() * (1.0 - batch.dones.array())).matrix();
}

inline Eigen::RowVectorXd sac_q_targets(const TransitionBatch& batch, const RewardModel& reward,
                                        const SquashedGaussianPolicy& policy, const CriticPair& critics, double alpha,
                                        double gamma, Rng& rng) {
  return sac_q_targets(batch, reward, policy, critics, alpha, gamma, policy.standard_normal(rng, batch.size()));
}

// ---------------------------------------------------------------- critic regression

/// One Adam step per critic on mean (critic(s,a) - y)^2. Returns the pre-step
/// loss averaged over the two critics.
inline double critic_regression_step(const TransitionBatch& batch, CriticPair& critics,
                                     const Eigen::RowVectorXd& targets) {
  require(targets.size() == batch.size() && batch.size() > 0, "critic update: target length mismatch");
  const Matrix x = critics.input(batch.states, batch.actions);
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  for (int k = 0; k < 2; ++k) {
    Mlp& net = k == 0 ? critics.c1 : critics.c2;
    AdamState& opt = k == 0 ? critics.opt1 : critics.opt2;
    ForwardCache cache;
    const Eigen::RowVectorXd err = net.forward(x, cache).row(0) - targets;
    loss += err.squaredNorm() / n;
    const GradTape tape = net.backward(cache, (2.0 / n) * err);
    adam_step(net, tape, opt);
  }
  return 0.5 * loss;
}

inline double sarc_critic_update(const TransitionBatch& batch, CriticPair& critics, const Eigen::RowVectorXd& targets) {
  require(critics.kind == CriticKind::C, "sarc_critic_update: critics must be C critics");
  return critic_regression_step(batch, critics, targets);
}

// ---------------------------------------------------------------- policy objectives

struct PolicyGradient {
  double objective = 0.0;
  GradTape grads;  // gradient of the objective (ascent direction)
};

/// Objective mean_j [ r(s_j, a~_j) + min C(s_j, a~_j) - alpha log pi(a~_j|s_j) ]
/// and its exact parameter gradient. `critics` may be null (the C term is then
/// absent) and `reward` may be null (the reward term is absent).
inline PolicyGradient policy_objective_gradient(const Matrix& states, const RewardModel* reward,
                                                const SquashedGaussianPolicy& policy, const CriticPair* critics,
                                                double alpha, const Matrix& noise) {
  require(states.cols() > 0, "policy update: empty batch");
  const Eigen::Index B = states.cols();
  const PolicySample ps = policy.sample(states, noise);
  Eigen::RowVectorXd value = Eigen::RowVectorXd::Zero(B);
  Matrix d_action = Matrix::Zero(policy.action_dim(), B);
  if (reward) {
    Matrix g;
    value += reward->rewards_and_action_grad(states, ps.actions, g);
    d_action += g;
  }
  if (critics) {
    Matrix g;
    value += critics->min_live_with_action_grad(states, ps.actions, g);
    d_action += g;
  }
  const Eigen::RowVectorXd total = value.array() - alpha * ps.log_prob.array();
  PolicyGradient out;
  out.objective = total.mean();
  const double inv_b = 1.0 / static_cast<double>(B);
  out.grads = policy.backward(ps, d_action * inv_b, Eigen::RowVectorXd::Constant(B, -alpha * inv_b));
  return out;
}

/// Ascent step: Adam descends on the negated gradient.
inline void apply_policy_ascent(SquashedGaussianPolicy& policy, GradTape grads) {
  grads *= -1.0;
  adam_step(policy.net(), grads, policy.optimizer());
}

/// One ascent step on the SARC actor objective. Returns the pre-step value.
inline double sarc_policy_update(const Matrix& states, const RewardModel& reward, SquashedGaussianPolicy& policy,
                                 const CriticPair& critics, double alpha, Rng& rng) {
  require(critics.kind == CriticKind::C, "sarc_policy_update: critics must be C critics");
  PolicyGradient pg =
      policy_objective_gradient(states, &reward, policy, &critics, alpha, policy.standard_normal(rng, states.cols()));
  apply_policy_ascent(policy, std::move(pg.grads));
  return pg.objective;
}

/// Ascends mean r(s, a~) alone (plus the entropy term when alpha > 0): the
/// short-sighted baseline that ignores everything after the immediate reward.
inline double naive_diff_update(const Matrix& states, const RewardModel& reward, SquashedGaussianPolicy& policy,
                                double alpha, Rng& rng) {
  PolicyGradient pg =
      policy_objective_gradient(states, &reward, policy, nullptr, alpha, policy.standard_normal(rng, states.cols()));
  apply_policy_ascent(policy, std::move(pg.grads));
  return pg.objective;
}

struct SacLosses {
  double critic_loss = 0.0;
  double policy_objective = 0.0;
};

/// Critic regression towards Q targets followed by one actor step on
/// min Q - alpha log pi, both on the same batch.
inline SacLosses sac_update(const TransitionBatch& batch, const RewardModel& reward, SquashedGaussianPolicy& policy,
                            CriticPair& critics, double alpha, double gamma, Rng& rng) {
  require(critics.kind == CriticKind::Q, "sac_update: critics must be Q critics");
  SacLosses out;
  out.critic_loss = critic_regression_step(batch, critics, sac_q_targets(batch, reward, policy, critics, alpha, gamma, rng));
  PolicyGradient pg = policy_objective_gradient(batch.states, nullptr, policy, &critics, alpha,
                                                policy.standard_normal(rng, batch.size()));
  apply_policy_ascent(policy, std::move(pg.grads));
  out.policy_objective = pg.objective;
  return out;
}

// ---------------------------------------------------------------- behaviour cloning

/// Mean (over samples and action dimensions) squared error of the deterministic policy.
inline double bc_mse(const SquashedGaussianPolicy& policy, const Matrix& states, const Matrix& actions) {
  return (policy.deterministic(states) - actions).squaredNorm() / static_cast<double>(actions.size());
}

/// Minibatch Adam regression of scale * tanh(mean(s)) onto expert actions.
/// Each epoch visits a fresh permutation of the data. Returns the final MSE.
inline double bc_fit(const Matrix& states, const Matrix& actions, SquashedGaussianPolicy& policy, int epochs, double lr,
                     long batch, Rng& rng) {
  require(states.cols() > 0 && states.cols() == actions.cols(), "bc_fit: dataset must be non-empty and aligned");
  require(epochs >= 0 && lr > 0.0 && batch > 0, "bc_fit: bad epochs, lr or batch");
  const Eigen::Index n = states.cols();
  const int ad = policy.action_dim();
  policy.reset_optimizer(lr);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min<Eigen::Index>(batch, n - start);
      Matrix s(states.rows(), m), a(ad, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        s.col(j) = states.col(order[static_cast<std::size_t>(start + j)]);
        a.col(j) = actions.col(order[static_cast<std::size_t>(start + j)]);
      }
      ForwardCache cache;
      const Matrix out = policy.net().forward(policy.obs_normalizer().apply(s), cache);
      const Matrix t = tanh_elementwise(out.topRows(ad));
      const Matrix err = policy.action_scale() * t - a;
      Matrix cot = Matrix::Zero(2 * ad, m);
      const double k = 2.0 / static_cast<double>(m * ad);
      cot.topRows(ad) = (k * policy.action_scale()) * err.cwiseProduct((1.0 - t.array().square()).matrix());
      adam_step(policy.net(), policy.net().backward(cache, cot), policy.optimizer());
    }
  }
  return bc_mse(policy, states, actions);
}

}  // namespace arc
