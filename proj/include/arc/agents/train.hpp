#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arc/adversary/discriminator.hpp"
#include "arc/adversary/reward_model.hpp"
#include "arc/agents/critics.hpp"
#include "arc/agents/evaluation.hpp"
#include "arc/agents/policy.hpp"
#include "arc/agents/replay_buffer.hpp"
#include "arc/agents/updates.hpp"
#include "arc/core/allocator.hpp"
#include "arc/core/errors.hpp"
#include "arc/core/normalizer.hpp"
#include "arc/core/rng.hpp"
#include "arc/env/continuous.hpp"
#include "arc/env/expert.hpp"

namespace arc {

enum class AgentKind { sarc, sac, naive_diff, bc };

inline std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::sarc: return "sarc";
    case AgentKind::sac: return "sac";
    case AgentKind::naive_diff: return "naive_diff";
    case AgentKind::bc: return "bc";
  }
  return "?";
}

inline AgentKind parse_agent_kind(std::string_view s) {
  if (s == "sarc") return AgentKind::sarc;
  if (s == "sac") return AgentKind::sac;
  if (s == "naive_diff") return AgentKind::naive_diff;
  if (s == "bc") return AgentKind::bc;
  throw ContractViolation("unknown agent '" + std::string(s) + "'");
}

struct TrainConfig {
  EnvKind env = EnvKind::reach;
  AgentKind agent = AgentKind::sarc;
  std::optional<RewardKind> reward = RewardKind::fmax_rkl;  // empty: true environment reward
  std::uint64_t seed = 0;

  long max_env_steps = 25000;
  long eval_every = 1000;
  int eval_episodes = 20;
  int expert_trajectories = 64;
  double env_noise = 1e-4;
  bool normalize_observations = true;

  std::vector<int> hidden{64, 64};
  double policy_lr = 1e-4;
  double critic_lr = 1e-4;
  double alpha = 0.2;
  double gamma = 0.99;
  double zeta = 0.995;
  long batch_size = 256;
  long buffer_capacity = 100000;

  long update_every = 20;
  int disc_iterations = 10;
  int agent_iterations = 10;
  int critic_steps_per_policy_step = 10;
  long update_after = 1000;
  long random_steps = 0;

  DiscriminatorConfig disc;
  long disc_batch = 128;

  int bc_epochs = 10000;
  double bc_lr = 1e-3;
  long bc_batch = 256;
};

/// Per-agent defaults: SARC learns at 1e-4 with ten critic steps per actor
/// step, SAC at 1e-3 with one.
inline TrainConfig default_train_config(AgentKind agent) {
  TrainConfig c;
  c.agent = agent;
  if (agent == AgentKind::sac) {
    c.policy_lr = c.critic_lr = 1e-3;
    c.critic_steps_per_policy_step = 1;
  }
  if (agent == AgentKind::naive_diff) c.alpha = 0.0;
  return c;
}

inline void validate(const TrainConfig& c) {
  require(c.max_env_steps >= 0, "max_env_steps must be non-negative");
  require(c.eval_every >= 1, "eval_every must be at least 1");
  require(c.eval_episodes >= 1, "eval_episodes must be at least 1");
  require(c.expert_trajectories >= 1, "expert_trajectories must be at least 1");
  require(c.gamma >= 0.0 && c.gamma < 1.0, "gamma must lie in [0, 1)");
  require(c.zeta >= 0.0 && c.zeta <= 1.0, "zeta must lie in [0, 1]");
  require(c.alpha >= 0.0, "alpha must be non-negative");
  require(c.batch_size >= 1 && c.disc_batch >= 1 && c.bc_batch >= 1, "batch sizes must be positive");
  require(c.buffer_capacity >= 1, "buffer_capacity must be positive");
  require(c.update_every >= 1 && c.disc_iterations >= 0 && c.agent_iterations >= 0, "bad update cadence");
  require(c.critic_steps_per_policy_step >= 1, "critic_steps_per_policy_step must be at least 1");
  require(c.policy_lr > 0.0 && c.critic_lr > 0.0 && c.bc_lr > 0.0, "learning rates must be positive");
  if (c.agent == AgentKind::bc)
    require(!c.reward.has_value(), "bc learns from demonstrations only and takes no reward");
  if (!c.reward && c.agent != AgentKind::bc)
    require(c.env != EnvKind::push, "the environment reward is only differentiable on car1d and reach");
}

struct EvalRow {
  long eval_step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double disc_loss = std::numeric_limits<double>::quiet_NaN();
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
  double policy_objective = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<EvalRow> rows;
  double wall_time_s = 0.0;

  double final_return() const { return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().mean_return; }
};

inline void write_run_csv(std::ostream& os, const RunRecord& rec) {
  os << "eval_step,mean_return,std_return,disc_loss,critic_loss,policy_objective\n";
  os << std::setprecision(17);
  for (const auto& r : rec.rows)
    os << r.eval_step << ',' << r.mean_return << ',' << r.std_return << ',' << r.disc_loss << ',' << r.critic_loss
       << ',' << r.policy_objective << '\n';
}

inline std::string run_csv(const RunRecord& rec) {
  std::ostringstream os;
  write_run_csv(os, rec);
  return os.str();
}

namespace train_detail {

struct Running {
  double sum = 0.0;
  long n = 0;
  void add(double v) { sum += v, ++n; }
  double take() {
    const double v = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    sum = 0.0, n = 0;
    return v;
  }
};

inline void stack(const std::vector<Trajectory>& trajs, Matrix& states, Matrix& actions) {
  long n = 0;
  for (const auto& t : trajs) n += static_cast<long>(t.transitions.size());
  const auto& first = trajs.front().transitions.front();
  states.resize(static_cast<Eigen::Index>(first.state.size()), n);
  actions.resize(static_cast<Eigen::Index>(first.action.size()), n);
  Eigen::Index j = 0;
  for (const auto& t : trajs)
    for (const auto& tr : t.transitions) {
      for (std::size_t i = 0; i < tr.state.size(); ++i) states(static_cast<Eigen::Index>(i), j) = tr.state[i];
      for (std::size_t i = 0; i < tr.action.size(); ++i) actions(static_cast<Eigen::Index>(i), j) = tr.action[i];
      ++j;
    }
}

inline std::unique_ptr<RewardModel> env_reward(EnvKind kind) {
  if (kind == EnvKind::car1d) return std::make_unique<Car1DReward>();
  if (kind == EnvKind::reach) return std::make_unique<ReachReward>();
  throw ContractViolation("no differentiable environment reward for " + std::string(to_string(kind)));
}

}  // namespace train_detail

/// Adversarial imitation loop. Every `update_every` steps run
/// `agent_iterations` rounds of (discriminator step, agent step); evaluate the
/// deterministic policy every `eval_every` steps. The trained policy is copied
/// to `final_policy` when given.
inline RunRecord train_ail(const TrainConfig& cfg, std::optional<SquashedGaussianPolicy>* final_policy = nullptr) {
  validate(cfg);
  tune_allocator();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.seed = cfg.seed;
  if (cfg.max_env_steps == 0 && cfg.agent != AgentKind::bc) return rec;

  auto env = make_env(cfg.env, cfg.env_noise);
  const int sd = env->state_dim(), ad = env->action_dim();
  const double bound = env->action_bound();

  Matrix exp_s, exp_a;
  train_detail::stack(generate_expert_dataset(cfg.env, cfg.expert_trajectories, derive_seed(cfg.seed, Stream::expert),
                                              cfg.env_noise),
                      exp_s, exp_a);
  const Normalizer obs_norm = cfg.normalize_observations ? Normalizer::from_columns(exp_s) : Normalizer::identity(sd);
  const Normalizer act_norm{Vector::Zero(ad), Vector::Constant(ad, bound)};
  const Normalizer sa_norm = Normalizer::concat(obs_norm, act_norm);

  PolicyConfig pcfg;
  pcfg.hidden = cfg.hidden;
  pcfg.learning_rate = cfg.policy_lr;
  SquashedGaussianPolicy policy(sd, ad, bound, pcfg, derive_seed(cfg.seed, Stream::policy_init), obs_norm);

  if (cfg.agent == AgentKind::bc) {
    Rng rng(derive_seed(cfg.seed, Stream::data));
    const double mse = bc_fit(exp_s, exp_a, policy, cfg.bc_epochs, cfg.bc_lr, cfg.bc_batch, rng);
    const ReturnStats st = evaluate_policy(policy, *env, cfg.eval_episodes, derive_seed(cfg.seed, Stream::eval));
    EvalRow row;
    row.mean_return = st.mean;
    row.std_return = st.std;
    row.critic_loss = mse;
    rec.rows.push_back(row);
    if (!policy.net().all_finite()) throw NumericalError("bc: non-finite policy parameters");
    if (final_policy) final_policy->emplace(policy);
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

  CriticConfig ccfg;
  ccfg.hidden = cfg.hidden;
  ccfg.learning_rate = cfg.critic_lr;
  const CriticKind ckind = cfg.agent == AgentKind::sac ? CriticKind::Q : CriticKind::C;
  CriticPair critics(sd, ad, ckind, ccfg, derive_seed(cfg.seed, Stream::critic_init), sa_norm);

  std::optional<Discriminator> disc;
  std::unique_ptr<RewardModel> reward;
  if (cfg.reward) {
    disc.emplace(sd, ad, cfg.disc, cfg.seed, sa_norm);
    reward = std::make_unique<DiscriminatorReward>(*disc, *cfg.reward);
  } else {
    reward = train_detail::env_reward(cfg.env);
  }

  ReplayBuffer buffer(cfg.buffer_capacity, sd, ad, derive_seed(cfg.seed, Stream::buffer));
  Rng env_rng(derive_seed(cfg.seed, Stream::env));
  Rng act_rng(derive_seed(cfg.seed, Stream::policy_sampling));
  Rng update_rng(derive_seed(cfg.seed, Stream::policy_sampling, 1));
  Rng expert_rng(derive_seed(cfg.seed, Stream::data));
  const std::uint64_t eval_seed = derive_seed(cfg.seed, Stream::eval);

  train_detail::Running disc_loss, critic_loss, policy_obj;
  std::vector<double> s = env->reset(env_rng);
  for (long step = 1; step <= cfg.max_env_steps; ++step) {
    std::vector<double> a;
    if (step <= cfg.random_steps) {
      for (int i = 0; i < ad; ++i) a.push_back(act_rng.uniform(-bound, bound));
    } else {
      a = policy.sample_action(s, false, act_rng).first;
    }
    const Transition tr = env->step(a);
    buffer.add(tr);
    s = env->episode_over() ? env->reset(env_rng) : tr.next_state;

    if (step % cfg.update_every == 0 && step >= cfg.update_after) {
      const int rounds = std::max(cfg.disc_iterations, cfg.agent_iterations);
      for (int it = 0; it < rounds; ++it) {
        if (disc && it < cfg.disc_iterations) {
          SABatch e{Matrix(sd, cfg.disc_batch), Matrix(ad, cfg.disc_batch)};
          for (long j = 0; j < cfg.disc_batch; ++j) {
            const auto c = static_cast<Eigen::Index>(expert_rng.index(static_cast<std::size_t>(exp_s.cols())));
            e.states.col(j) = exp_s.col(c);
            e.actions.col(j) = exp_a.col(c);
          }
          const TransitionBatch ab = buffer.sample(cfg.disc_batch);
          const double obj = discriminator_update(*disc, e, SABatch{ab.states, ab.actions});
          disc_loss.add(-obj / static_cast<double>(2 * cfg.disc_batch));
        }
        if (it >= cfg.agent_iterations) continue;
        switch (cfg.agent) {
          case AgentKind::sarc: {
            TransitionBatch b;
            for (int k = 0; k < cfg.critic_steps_per_policy_step; ++k) {
              b = buffer.sample(cfg.batch_size);
              const Eigen::RowVectorXd y =
                  sarc_c_targets(b, *reward, policy, critics, cfg.alpha, cfg.gamma, update_rng);
              critic_loss.add(sarc_critic_update(b, critics, y));
            }
            policy_obj.add(sarc_policy_update(b.states, *reward, policy, critics, cfg.alpha, update_rng));
            polyak_update(critics, cfg.zeta);
            break;
          }
          case AgentKind::sac: {
            for (int k = 0; k + 1 < cfg.critic_steps_per_policy_step; ++k) {
              const TransitionBatch b = buffer.sample(cfg.batch_size);
              critic_loss.add(critic_regression_step(
                  b, critics, sac_q_targets(b, *reward, policy, critics, cfg.alpha, cfg.gamma, update_rng)));
            }
            const TransitionBatch b = buffer.sample(cfg.batch_size);
            const SacLosses l = sac_update(b, *reward, policy, critics, cfg.alpha, cfg.gamma, update_rng);
            polyak_update(critics, cfg.zeta);
            critic_loss.add(l.critic_loss);
            policy_obj.add(l.policy_objective);
            break;
          }
          case AgentKind::naive_diff: {
            const TransitionBatch b = buffer.sample(cfg.batch_size);
            policy_obj.add(naive_diff_update(b.states, *reward, policy, cfg.alpha, update_rng));
            break;
          }
          case AgentKind::bc: break;
        }
      }
    }

    if (step % cfg.eval_every == 0 || step == cfg.max_env_steps) {
      if (!policy.net().all_finite() || !critics.c1.all_finite() || !critics.c2.all_finite() ||
          (disc && !disc->net().all_finite()))
        throw NumericalError("train: non-finite parameters at step " + std::to_string(step));
      const ReturnStats st = evaluate_policy(policy, *env, cfg.eval_episodes, eval_seed);
      rec.rows.push_back(EvalRow{step, st.mean, st.std, disc_loss.take(), critic_loss.take(), policy_obj.take()});
    }
  }
  if (final_policy) final_policy->emplace(policy);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace arc
