#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "arc/harness/run.hpp"

using namespace arc;
namespace fs = std::filesystem;

namespace {

std::string field_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("arc_harness_" + name);
  fs::remove_all(p);
  return p;
}

json short_car1d(const std::string& agent) {
  return {{"task", "car1d"},
          {"agent", agent},
          {"seeds", {3}},
          {"max_env_steps", 300},
          {"eval_every", 150},
          {"eval_episodes", 2},
          {"hyperparameters",
           {{"update_after", 100}, {"agent_iterations", 2}, {"disc_iterations", 2}, {"critic_steps_per_policy_step", 2}}}};
}

}  // namespace

// ---------------------------------------------------------------- parsing

TEST(ParseConfig, MinimalFillsAndLogsDefaults) {
  std::vector<std::string> log;
  const ExperimentConfig c = parse_config(json{{"task", "gridworld_pi"}}, &log);
  EXPECT_EQ(c.task, Task::gridworld_pi);
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{0});
  EXPECT_EQ(c.hyperparameters.at("gamma"), 0.9);
  EXPECT_EQ(log.size(), 1 + c.hyperparameters.size());
  EXPECT_NE(std::find(log.begin(), log.end(), "default width = 5"), log.end());
}

TEST(ParseConfig, TrainingDefaultsFollowAgent) {
  const ExperimentConfig sac = parse_config(json{{"task", "planar_reach"}, {"agent", "sac"}});
  EXPECT_EQ(sac.hyperparameters.at("policy_lr"), 1e-3);
  EXPECT_EQ(sac.hyperparameters.at("critic_steps_per_policy_step"), 1);
  const ExperimentConfig sarc = parse_config(json{{"task", "planar_reach"}});
  EXPECT_EQ(sarc.hyperparameters.at("policy_lr"), 1e-4);
  EXPECT_EQ(sarc.reward_kind, "fmax_rkl");
  EXPECT_EQ(sarc.eval_episodes, 20);
  EXPECT_EQ(parse_config(json{{"task", "planar_reach"}, {"agent", "bc"}}).reward_kind, "env");
}

TEST(ParseConfig, ErrorsNameTheField) {
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"hyperparameters", {{"gamm", 0.9}}}}), "gamm");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"seedz", {1}}}), "seedz");
  EXPECT_EQ(field_of(json::object()), "task");
  EXPECT_EQ(field_of(json{{"task", "mujoco"}}), "task");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"eval_episodes", "many"}}), "eval_episodes");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"eval_episodes", 0}}), "eval_episodes");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"hyperparameters", {{"batch_size", 1.5}}}}), "batch_size");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"hyperparameters", {{"hidden", {64, "x"}}}}}), "hidden");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"seeds", json::array()}}), "seeds");
  EXPECT_EQ(field_of(json{{"task", "car1d"}, {"agent", "ppo"}}), "agent");
  EXPECT_EQ(field_of(json{{"task", "snr"}, {"agent", "sarc"}}), "agent");
  EXPECT_EQ(field_of(json{{"task", "grad_accuracy"}, {"seeds", {1, 2}}}), "seeds");
  EXPECT_EQ(field_of(json::array()), "<root>");
}

TEST(ParseConfig, IncompatibleCombinationsRejected) {
  EXPECT_EQ(field_of(json{{"task", "planar_reach"}, {"agent", "bc"}, {"reward_kind", "gail"}}), "reward_kind");
  EXPECT_EQ(field_of(json{{"task", "planar_push"}, {"agent", "sarc"}, {"reward_kind", "env"}}), "reward_kind");
  const ExperimentConfig bad = parse_config(json{{"task", "car1d"}, {"hyperparameters", {{"gamma", 1.5}}}});
  try {
    run_experiment(bad);
    FAIL() << "accepted gamma 1.5";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "hyperparameters");
  }
}

TEST(ParseConfig, RoundTrip) {
  for (const json& j : {json{{"task", "gridworld_pi"}}, json{{"task", "snr"}, {"hyperparameters", {{"s_rc", -0.5}}}},
                        short_car1d("sac"), json{{"task", "grad_accuracy"}, {"seeds", {4, 5, 6}}},
                        json{{"task", "planar_push"}, {"hyperparameters", {{"alpha", 1}}}}}) {
    const ExperimentConfig a = parse_config(j);
    const ExperimentConfig b = parse_config(json::parse(to_json(a).dump()));
    EXPECT_EQ(a, b) << j.dump();
    EXPECT_EQ(config_hash(a), config_hash(b));
  }
}

TEST(ConfigHash, StableUnderReorderingAndExplicitDefaults) {
  const auto a = parse_config(json::parse(R"({"task":"car1d","seeds":[1,2],"hyperparameters":{"alpha":0.1,"zeta":0.9}})"));
  const auto b = parse_config(json::parse(R"({"hyperparameters":{"zeta":0.9,"alpha":0.1},"seeds":[1,2],"task":"car1d"})"));
  const auto c = parse_config(
      json::parse(R"({"task":"car1d","seeds":[1,2],"agent":"sarc","hyperparameters":{"alpha":0.1,"zeta":0.9,"gamma":0.99}})"));
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(c));
  const auto d = parse_config(json::parse(R"({"task":"car1d","seeds":[1,2],"hyperparameters":{"alpha":0.1,"zeta":0.8}})"));
  EXPECT_NE(config_hash(a), config_hash(d));
  const auto e = parse_config(json::parse(R"({"task":"car1d","seeds":[1,3],"hyperparameters":{"alpha":0.1,"zeta":0.9}})"));
  EXPECT_NE(config_hash(a), config_hash(e));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(ConfigHash, IntegerAndRealSpellingsAgree) {
  const auto a = parse_config(json{{"task", "car1d"}, {"hyperparameters", {{"alpha", 1}}}});
  const auto b = parse_config(json{{"task", "car1d"}, {"hyperparameters", {{"alpha", 1.0}}}});
  EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(ParseConfig, TrainConfigMapping) {
  const auto c = parse_config(json{{"task", "planar_reach"},
                                   {"agent", "sarc"},
                                   {"reward_kind", "gail"},
                                   {"hyperparameters", {{"gp_lambda", 0.0}, {"hidden", {32}}, {"disc_batch", 64}}}});
  const TrainConfig t = to_train_config(c, 9);
  EXPECT_EQ(t.env, EnvKind::reach);
  EXPECT_EQ(t.reward, RewardKind::gail);
  EXPECT_EQ(t.seed, 9u);
  EXPECT_EQ(t.disc.gp_lambda, 0.0);
  EXPECT_EQ(t.hidden, std::vector<int>{32});
  EXPECT_EQ(t.disc_batch, 64);
}

// ---------------------------------------------------------------- running

TEST(RunExperiment, GridworldSingleRecord) {
  const auto recs = run_experiment(parse_config(json{{"task", "gridworld_pi"}}));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_TRUE(recs[0].summary.at("policies_equal").get<bool>());
  EXPECT_LT(recs[0].summary.at("q_minus_r_plus_c_inf").get<double>(), 1e-9);
  EXPECT_GE(recs[0].summary.at("improvement_steps_c").get<int>(), 1);
  EXPECT_EQ(recs[0].csv.substr(0, recs[0].csv.find('\n')),
            "improvement_steps_c,improvement_steps_q,policies_equal,q_minus_r_plus_c_inf");
}

TEST(RunExperiment, SnrAndTheorem2Tasks) {
  const auto snr = run_experiment(parse_config(json{{"task", "snr"}, {"seeds", {1, 2}}, {"hyperparameters", {{"n_samples", 200000}}}}));
  ASSERT_EQ(snr.size(), 2u);
  EXPECT_NEAR(snr[0].summary.at("monte_carlo_snr").get<double>(), 2.0, 0.1);
  const auto t2 = run_experiment(parse_config(json{{"task", "theorem2"}, {"hyperparameters", {{"grid_points", 20001}}}}));
  EXPECT_EQ(t2[0].summary.at("bounds_held"), 20);
  const auto undefined = run_experiment(
      parse_config(json{{"task", "snr"}, {"hyperparameters", {{"s_rc", -1.0}, {"n_samples", 10000}}}}));
  EXPECT_EQ(undefined[0].summary.at("threshold"), "undefined");
}

TEST(RunExperiment, SameConfigSameCsvBytes) {
  for (const json& j : {json{{"task", "gridworld_pi"}}, json{{"task", "theorem2"}}, short_car1d("sarc"), short_car1d("naive_diff")}) {
    const ExperimentConfig c = parse_config(j);
    const auto a = run_experiment(c), b = run_experiment(c);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].csv, b[i].csv) << j.dump();
  }
}

TEST(RunExperiment, WritesArtifactsUnderHashDirectory) {
  const fs::path root = scratch_dir("artifacts");
  json j = short_car1d("sarc");
  j["reward_kind"] = "gail";
  const ExperimentConfig c = parse_config(j);
  const auto recs = run_experiment(c, root);
  const fs::path dir = root / config_hash(c);
  ASSERT_TRUE(fs::is_directory(dir));
  EXPECT_EQ(slurp(dir / "seed_3.csv"), recs[0].csv);
  EXPECT_EQ(parse_config(json::parse(slurp(dir / "config.json"))), c);
  const json sidecar = json::parse(slurp(dir / "discriminator.json"));
  EXPECT_EQ(sidecar, (json{{"kind", "gail"}, {"clip", 10.0}, {"lambda", 4.0}}));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_EQ(recs[0].run->config_hash, config_hash(c));

  // the saved policy evaluates to the recorded final return
  const SquashedGaussianPolicy p =
      load_policy((dir / "policy_seed_3.mlp").string(), (dir / "policy_seed_3.json").string());
  const auto env = make_env(EnvKind::car1d, 1e-4);
  const ReturnStats st = evaluate_policy(p, *env, 2, derive_seed(3, Stream::eval));
  EXPECT_EQ(st.mean, recs[0].run->final_return());
  fs::remove_all(root);
}

TEST(RunExperiment, EnvRewardRunHasNoDiscriminatorSidecar) {
  const fs::path root = scratch_dir("env_reward");
  json j = short_car1d("naive_diff");
  j["reward_kind"] = "env";
  const ExperimentConfig c = parse_config(j);
  run_experiment(c, root);
  EXPECT_FALSE(fs::exists(root / config_hash(c) / "discriminator.json"));
  fs::remove_all(root);
}

// ---------------------------------------------------------------- evaluation protocol

TEST(EvaluatePolicy, ZeroHorizonGivesZero) {
  const Car1DEnv env(0);
  const SquashedGaussianPolicy p(1, 1, 1.0, PolicyConfig{}, 1);
  const ReturnStats st = evaluate_policy(p, env, 5, 1);
  EXPECT_EQ(st.mean, 0.0);
  EXPECT_EQ(st.std, 0.0);
}

TEST(EvaluatePolicy, ScriptedExpertWithinBandAndNoiselessIsExact) {
  const auto noisy = make_env(EnvKind::reach, 1e-4);
  const auto expert = [](std::span<const double> s) { return scripted_expert(EnvKind::reach, s); };
  const ReturnStats st = evaluate_controller(*noisy, expert, 20, 5);
  EXPECT_GE(st.mean, -0.9);
  EXPECT_LE(st.mean, -0.35);
  const auto clean = make_env(EnvKind::reach, 0.0);
  EXPECT_EQ(evaluate_controller(*clean, expert, 20, 5).std, 0.0);
  const SquashedGaussianPolicy p(2, 2, kPlanarMaxStep, PolicyConfig{}, 4);
  EXPECT_EQ(evaluate_policy(p, *clean, 10, 6).std, 0.0);
}

TEST(EvaluatePolicy, RejectsNoEpisodes) {
  const Car1DEnv env;
  const SquashedGaussianPolicy p(1, 1, 1.0, PolicyConfig{}, 1);
  EXPECT_THROW(evaluate_policy(p, env, 0, 1), ContractViolation);
}
