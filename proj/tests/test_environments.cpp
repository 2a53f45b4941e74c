#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "arc/env/continuous.hpp"
#include "arc/env/expert.hpp"
#include "arc/env/tabular_mdp.hpp"
#include "arc/env/trajectory_csv.hpp"

using namespace arc;

TEST(Gridworld, TwoByOneRewardOnlyForRightFromLeft) {
  const TabularMDP mdp = make_gridworld(2, 1, GridCell{1, 0});
  mdp.validate();
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 4; ++a) {
      const double expected = (s == 0 && a == static_cast<int>(GridAction::right)) ? 1.0 : 0.0;
      EXPECT_EQ(mdp.r(s, a), expected) << s << "," << a;
    }
  EXPECT_TRUE(mdp.terminal_mask[1]);
}

TEST(Gridworld, RowsSumToOneAndGoalAbsorbs) {
  const TabularMDP mdp = make_gridworld(4, 3, GridCell{2, 1});
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) sum += mdp.p(s, a, s2);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  const int goal = 1 * 4 + 2;
  for (int a = 0; a < 4; ++a) {
    EXPECT_EQ(mdp.p(goal, a, goal), 1.0);
    EXPECT_EQ(mdp.r(goal, a), 0.0);
  }
}

TEST(Gridworld, CornerGoalHasTwoRewardingPairs) {
  const TabularMDP mdp = default_gridworld();
  // Enumerate neighbours of (4,4) inside a 5x5 grid.
  int neighbours = 0;
  const int dx[4] = {-1, 1, 0, 0}, dy[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int x = 4 + dx[k], y = 4 + dy[k];
    if (x >= 0 && x < 5 && y >= 0 && y < 5) ++neighbours;
  }
  const auto rewarding = std::count(mdp.reward.begin(), mdp.reward.end(), 1.0);
  EXPECT_EQ(rewarding, neighbours);
  EXPECT_EQ(rewarding, 2);
}

TEST(Gridworld, WallsKeepAgentInPlace) {
  const TabularMDP mdp = default_gridworld();
  EXPECT_EQ(mdp.p(0, static_cast<int>(GridAction::left), 0), 1.0);
  EXPECT_EQ(mdp.p(0, static_cast<int>(GridAction::up), 0), 1.0);
  EXPECT_EQ(mdp.p(0, static_cast<int>(GridAction::right), 1), 1.0);
  EXPECT_EQ(mdp.p(0, static_cast<int>(GridAction::down), 5), 1.0);
}

TEST(Gridworld, OutOfBoundsGoalThrows) {
  EXPECT_THROW(make_gridworld(3, 3, GridCell{3, 0}), ContractViolation);
  EXPECT_THROW(make_gridworld(3, 3, GridCell{0, -1}), ContractViolation);
}

TEST(RandomMdp, IsValid) {
  Rng rng(3);
  for (int k = 0; k < 10; ++k) make_random_mdp(4, 3, 0.9, rng).validate();
}

TEST(Car1D, ExpertValues) {
  EXPECT_NEAR(car1d_expert(0.0), 0.2, 1e-15);
  EXPECT_NEAR(car1d_expert(1.0), 0.1, 1e-15);
  EXPECT_NEAR(car1d_expert(0.5), 0.15, 1e-15);
}

TEST(Car1D, RewardValues) {
  EXPECT_NEAR(car1d_reward(0.0, 0.2), 0.0, 1e-14);
  EXPECT_NEAR(car1d_reward(0.0, 0.15), -0.25, 1e-12);
  EXPECT_NEAR(car1d_reward(1.0, 0.2), -1.0, 1e-12);
}

TEST(Car1D, RewardMaximisedOnExpertCurve) {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const double x = rng.uniform(-1, 2);
    const double a_star = car1d_expert(x);
    EXPECT_EQ(car1d_reward(x, a_star), 0.0);
    const double d = rng.uniform(-1, 1);
    if (d != 0.0) {
      EXPECT_LT(car1d_reward(x, a_star + d), 0.0);
      EXPECT_NEAR(car1d_reward(x, a_star + d), -100.0 * d * d, 1e-9);
    }
  }
}

TEST(Car1D, StatefulDynamics) {
  Car1DEnv env;
  Rng rng(0);
  env.reset(rng);
  const std::vector<double> a{0.25};
  const Transition t = env.step(a);
  EXPECT_EQ(t.state[0], 0.0);
  EXPECT_NEAR(t.next_state[0], 0.025, 1e-15);
  EXPECT_NEAR(t.reward_env, car1d_reward(0.0, 0.25), 1e-15);
  EXPECT_EQ(env.horizon(), 50);
  // actions beyond the bound are clipped to it
  const Transition u = env.step(std::vector<double>{0.9});
  EXPECT_NEAR(u.next_state[0], 0.025 + 0.1 * env.action_bound(), 1e-15);
  EXPECT_EQ(env.action_bound(), 0.3);
}

TEST(PlanarReach, ZeroDistanceZeroReward) {
  PlanarReachEnv env(0.0);
  Rng rng(0);
  env.reset(rng);
  env.set_offset(0.0, 0.0);
  const std::vector<double> a{0.0, 0.0};
  EXPECT_EQ(env.step(a).reward_env, 0.0);
}

TEST(PlanarReach, SaturatedStepFromNominalStart) {
  PlanarReachEnv env(0.0);
  Rng rng(0);
  const auto s = env.reset(rng);
  EXPECT_EQ(s[0], 0.15);
  EXPECT_EQ(s[1], -0.15);
  const std::vector<double> a{0.033, -0.033};
  const Transition t = env.step(a);
  EXPECT_NEAR(t.next_state[0], 0.117, 1e-12);
  EXPECT_NEAR(t.next_state[1], -0.117, 1e-12);
  EXPECT_NEAR(t.reward_env, -std::sqrt(2.0) * 0.117, 1e-12);
  EXPECT_NEAR(t.reward_env, -0.1655, 1e-4);
}

TEST(PlanarReach, ActionClampingIsExact) {
  PlanarReachEnv env(0.0);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    if (env.t() == 0 || env.episode_over()) env.reset(rng);
    const std::vector<double> before = env.observe();
    const std::vector<double> a{rng.uniform(-1, 1), rng.uniform(-0.05, 0.05)};
    const Transition t = env.step(a);
    for (int d = 0; d < 2; ++d) {
      const double applied = before[static_cast<std::size_t>(d)] - t.next_state[static_cast<std::size_t>(d)];
      EXPECT_LE(std::abs(applied), 0.033 + 1e-15);
      EXPECT_EQ(t.action[static_cast<std::size_t>(d)], std::clamp(a[static_cast<std::size_t>(d)], -0.033, 0.033));
    }
  }
}

TEST(PlanarReach, RewardNonPositiveZeroOnlyAtGoal) {
  PlanarReachEnv env(0.0);
  Rng rng(6);
  for (int k = 0; k < 200; ++k) {
    env.reset(rng);
    env.set_offset(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    const std::vector<double> a{rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04)};
    const Transition t = env.step(a);
    EXPECT_LE(t.reward_env, 0.0);
    if (t.reward_env == 0.0) {
      EXPECT_EQ(std::hypot(t.next_state[0], t.next_state[1]), 0.0);
    }
  }
}

TEST(PlanarReach, EpisodeLengthIsHorizon) {
  PlanarReachEnv env;
  Rng rng(1);
  const Trajectory traj = rollout(env, rng, [](std::span<const double>) { return std::vector<double>{0.0, 0.0}; });
  EXPECT_EQ(traj.transitions.size(), 20u);
  EXPECT_THROW(env.step(std::vector<double>{0.0, 0.0}), ContractViolation);
}

TEST(PlanarPush, NoContactKeepsBlockStill) {
  PlanarPushEnv env(0.0);
  Rng rng(0);
  env.reset(rng);
  env.set_positions(0, 0, 0, -0.2, 0, -0.3);
  const std::vector<double> a{0.03, 0.0};
  const Transition t = env.step(a);
  EXPECT_EQ(env.block()[0], 0.0);
  EXPECT_EQ(env.block()[1], -0.2);
  EXPECT_NEAR(t.reward_env, -0.1, 1e-15);
}

TEST(PlanarPush, PushThroughCentreMovesBlockAlongAxis) {
  PlanarPushEnv env(0.0);
  Rng rng(0);
  env.reset(rng);
  // Effector just touching the block from above, driven straight down.
  env.set_positions(0, 0, 0, -0.045, 0, -0.3);
  const std::vector<double> a{0.0, -0.033};
  const Transition t = env.step(a);
  EXPECT_NEAR(env.block()[0], 0.0, 1e-15);
  EXPECT_NEAR(env.block()[1], -0.078, 1e-12);
  EXPECT_NEAR(t.reward_env, -(0.3 - 0.078), 1e-12);
  EXPECT_NEAR(std::hypot(t.next_state[0], t.next_state[1]), PlanarPushEnv::kContactDistance, 1e-12);
}

TEST(PlanarPush, LargeStepDoesNotTunnel) {
  PlanarPushEnv env(0.0);
  Rng rng(0);
  env.reset(rng);
  env.set_positions(0, 0, 0, -0.05, 0, -0.3);
  for (int k = 0; k < 5; ++k) env.step(std::vector<double>{0.0, -0.033});
  EXPECT_LT(env.block()[1], env.effector()[1]);
}

TEST(Expert, ReachProportionalAndSaturated) {
  const std::vector<double> near{0.001, 0.0}, far{0.15, -0.15};
  const auto a_near = scripted_expert(EnvKind::reach, near);
  EXPECT_NEAR(a_near[0], kExpertGain * 0.001, 1e-15);
  EXPECT_EQ(a_near[1], 0.0);
  const auto a_far = scripted_expert(EnvKind::reach, far);
  EXPECT_EQ(a_far[0], 0.033);
  EXPECT_EQ(a_far[1], -0.033);
}

TEST(Expert, UnknownKindRejected) {
  EXPECT_THROW(parse_env_kind("fetch_slide"), ContractViolation);
  const std::vector<double> wrong{0.1, 0.1, 0.1};
  EXPECT_THROW(scripted_expert(EnvKind::reach, wrong), ContractViolation);
}

TEST(Expert, ReachReturnBandOnNominalStart) {
  PlanarReachEnv env(0.0);
  Rng rng(0);
  const Trajectory t = rollout(env, rng, [](std::span<const double> s) { return scripted_expert(EnvKind::reach, s); });
  EXPECT_GE(t.episode_return, -0.9);
  EXPECT_LE(t.episode_return, -0.35);
}

TEST(Expert, ReachTrajectoriesEndNearGoal) {
  const auto data = generate_expert_dataset(EnvKind::reach, 64, 123);
  ASSERT_EQ(data.size(), 64u);
  std::size_t transitions = 0;
  double mean_return = 0.0;
  for (const auto& t : data) {
    transitions += t.transitions.size();
    const auto& last = t.transitions.back().next_state;
    EXPECT_LT(std::hypot(last[0], last[1]), 0.01);
    mean_return += t.episode_return / 64.0;
  }
  EXPECT_EQ(transitions, 1280u);
  EXPECT_GE(mean_return, -0.9);
  EXPECT_LE(mean_return, -0.35);
}

TEST(Expert, PushReturnBandAndFinalDistance) {
  const auto data = generate_expert_dataset(EnvKind::push, 16, 5);
  for (const auto& t : data) {
    EXPECT_GE(t.episode_return, -2.5);
    EXPECT_LE(t.episode_return, -0.8);
    EXPECT_EQ(t.transitions.size(), 30u);
    const auto& last = t.transitions.back().next_state;
    EXPECT_LT(std::hypot(last[2], last[3]), 0.01);
  }
}

TEST(Expert, TrajectoryReturnIsSumOfRewards) {
  const auto data = generate_expert_dataset(EnvKind::push, 3, 9);
  for (const auto& t : data) {
    double sum = 0.0;
    for (const auto& tr : t.transitions) sum += tr.reward_env;
    EXPECT_EQ(sum, t.episode_return);
  }
}

TEST(Expert, DatasetIsDeterministic) {
  const auto a = generate_expert_dataset(EnvKind::reach, 8, 77);
  const auto b = generate_expert_dataset(EnvKind::reach, 8, 77);
  std::stringstream sa, sb;
  write_trajectories_csv(sa, a);
  write_trajectories_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  const auto c = generate_expert_dataset(EnvKind::reach, 8, 78);
  std::stringstream sc;
  write_trajectories_csv(sc, c);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(TrajectoryCsv, HeaderAndRoundTrip) {
  const auto data = generate_expert_dataset(EnvKind::push, 2, 1);
  std::stringstream ss;
  write_trajectories_csv(ss, data);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header, "episode,t,s0,s1,s2,s3,a0,a1,reward,done");
  const auto back = read_trajectories_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    ASSERT_EQ(back[e].transitions.size(), data[e].transitions.size());
    for (std::size_t t = 0; t < data[e].transitions.size(); ++t) {
      EXPECT_EQ(back[e].transitions[t].state, data[e].transitions[t].state);
      EXPECT_EQ(back[e].transitions[t].action, data[e].transitions[t].action);
      EXPECT_EQ(back[e].transitions[t].reward_env, data[e].transitions[t].reward_env);
    }
  }
}
