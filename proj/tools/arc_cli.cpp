#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arc/env/expert.hpp"
#include "arc/env/trajectory_csv.hpp"
#include "arc/harness/run.hpp"

namespace {

using arc::ConfigError;
using arc::ExperimentConfig;
using arc::json;
using arc::Task;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<long long> seed;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "experiment config (JSON)");
  sub->add_option("--out", f.out, "output root; artifacts go to <out>/<config_hash>/");
  sub->add_option("--seed", f.seed, "replaces the config's first seed");
}

ExperimentConfig load(const CommonFlags& f, const std::set<Task>& allowed, Task fallback) {
  std::vector<std::string> log;
  json j;
  if (f.config.empty()) {
    j = {{"task", std::string(arc::to_string(fallback))}};
  } else {
    std::ifstream is(f.config);
    if (!is) throw ConfigError("--config", "cannot open " + f.config);
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
  }
  if (f.seed) {
    if (*f.seed < 0) throw ConfigError("--seed", "must be non-negative");
    if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    json seeds = j.contains("seeds") && j["seeds"].is_array() && !j["seeds"].empty() ? j["seeds"] : json::array({0});
    seeds[0] = *f.seed;
    j["seeds"] = seeds;
  }
  ExperimentConfig c = arc::parse_config(j, &log);
  for (const auto& line : log) std::cerr << "[config] " << line << '\n';
  if (!allowed.count(c.task)) throw ConfigError("task", "task " + std::string(arc::to_string(c.task)) + " is not valid for this subcommand");
  return c;
}

int run_and_report(const ExperimentConfig& c, const CommonFlags& f) {
  std::optional<std::filesystem::path> out;
  if (!f.out.empty()) out = f.out;
  const auto records = arc::run_experiment(c, out);
  json report = {{"config_hash", arc::config_hash(c)}, {"task", std::string(arc::to_string(c.task))}, {"seeds", json::array()}};
  for (const auto& r : records) {
    json s = r.summary;
    s["seed"] = r.seed;
    report["seeds"].push_back(s);
  }
  if (out) report["output_dir"] = (*out / arc::config_hash(c)).string();
  std::cout << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Actor Residual Critic experiments"};
  app.require_subcommand(1);

  CommonFlags tabular_f, train_f, grad_f, snr_f, thm_f, eval_f;
  auto* tabular = app.add_subcommand("tabular", "policy iteration with C and Q on the grid world");
  add_common(tabular, tabular_f);
  auto* train = app.add_subcommand("train", "adversarial imitation or BC on car1d / planar_reach / planar_push");
  add_common(train, train_f);
  auto* grad = app.add_subcommand("grad-accuracy", "Q vs r + C gradient accuracy on the 1D car");
  add_common(grad, grad_f);
  auto* snr = app.add_subcommand("snr", "signal-to-noise algebra and Monte Carlo check");
  add_common(snr, snr_f);
  auto* thm = app.add_subcommand("theorem2", "accurate values with arbitrarily wrong slopes");
  add_common(thm, thm_f);

  auto* eval = app.add_subcommand("eval", "deterministic evaluation of a saved policy or the scripted expert");
  add_common(eval, eval_f);
  std::string eval_policy, eval_task = "planar_reach";
  int eval_episodes = 20;
  eval->add_option("--policy", eval_policy, "policy snapshot (.mlp); metadata is read from the matching .json");
  eval->add_option("--task", eval_task, "car1d | planar_reach | planar_push (ignored with --config)");
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");

  auto* expert = app.add_subcommand("expert-gen", "write scripted-expert trajectories as CSV");
  std::string expert_task = "planar_reach", expert_out;
  int expert_n = 64;
  long long expert_seed = 0;
  double expert_noise = 1e-4;
  expert->add_option("--task", expert_task, "car1d | planar_reach | planar_push");
  expert->add_option("-n,--trajectories", expert_n, "number of trajectories");
  expert->add_option("--seed", expert_seed, "dataset seed");
  expert->add_option("--noise", expert_noise, "start-position noise std (m)");
  expert->add_option("--out", expert_out, "output CSV file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tabular->parsed()) return run_and_report(load(tabular_f, {Task::gridworld_pi}, Task::gridworld_pi), tabular_f);
    if (train->parsed())
      return run_and_report(load(train_f, {Task::car1d, Task::planar_reach, Task::planar_push}, Task::planar_reach), train_f);
    if (grad->parsed()) return run_and_report(load(grad_f, {Task::grad_accuracy}, Task::grad_accuracy), grad_f);
    if (snr->parsed()) return run_and_report(load(snr_f, {Task::snr}, Task::snr), snr_f);
    if (thm->parsed()) return run_and_report(load(thm_f, {Task::theorem2}, Task::theorem2), thm_f);

    if (eval->parsed()) {
      Task task;
      std::uint64_t seed = 0;
      int episodes = eval_episodes;
      double noise = 1e-4;
      if (!eval_f.config.empty()) {
        const ExperimentConfig c = load(eval_f, {Task::car1d, Task::planar_reach, Task::planar_push}, Task::planar_reach);
        task = c.task;
        seed = c.seeds.front();
        episodes = c.eval_episodes;
        noise = c.hyperparameters.at("env_noise");
      } else {
        const auto t = arc::parse_task(eval_task);
        if (!t || !arc::is_training_task(*t)) throw ConfigError("--task", "expected car1d, planar_reach or planar_push");
        task = *t;
        if (eval_f.seed) seed = static_cast<std::uint64_t>(*eval_f.seed);
      }
      if (episodes < 1) throw ConfigError("--episodes", "must be at least 1");
      const auto env = arc::make_env(arc::env_of(task), noise);
      const std::uint64_t eval_seed = arc::derive_seed(seed, arc::Stream::eval);
      arc::ReturnStats st;
      std::string who = "scripted_expert";
      if (eval_policy.empty()) {
        const arc::EnvKind kind = arc::env_of(task);
        st = arc::evaluate_controller(
            *env, [kind](std::span<const double> s) { return arc::scripted_expert(kind, s); }, episodes, eval_seed);
      } else {
        std::filesystem::path meta = eval_policy;
        meta.replace_extension(".json");
        const arc::SquashedGaussianPolicy p = arc::load_policy(eval_policy, meta.string());
        if (p.state_dim() != env->state_dim() || p.action_dim() != env->action_dim())
          throw ConfigError("--policy", "policy dimensions do not match task " + std::string(arc::to_string(task)));
        if (!p.net().all_finite()) throw arc::NumericalError("policy snapshot has non-finite parameters");
        st = arc::evaluate_policy(p, *env, episodes, eval_seed);
        who = eval_policy;
      }
      std::cout << json{{"task", std::string(arc::to_string(task))}, {"controller", who}, {"episodes", episodes},
                        {"mean_return", st.mean}, {"std_return", st.std}}
                       .dump(2)
                << '\n';
      return 0;
    }

    if (expert->parsed()) {
      const auto t = arc::parse_task(expert_task);
      if (!t || !arc::is_training_task(*t)) throw ConfigError("--task", "expected car1d, planar_reach or planar_push");
      if (expert_n < 1) throw ConfigError("--trajectories", "must be at least 1");
      if (expert_seed < 0) throw ConfigError("--seed", "must be non-negative");
      if (!(expert_noise >= 0.0)) throw ConfigError("--noise", "must be non-negative");
      const auto trajs = arc::generate_expert_dataset(arc::env_of(*t), expert_n, static_cast<std::uint64_t>(expert_seed), expert_noise);
      if (expert_out.empty()) {
        arc::write_trajectories_csv(std::cout, trajs);
      } else {
        std::ofstream os(expert_out);
        if (!os) throw ConfigError("--out", "cannot write " + expert_out);
        arc::write_trajectories_csv(os, trajs);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const arc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const arc::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
