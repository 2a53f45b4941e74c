#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arc/agents/train.hpp"
#include "arc/analysis/grad_accuracy.hpp"
#include "arc/analysis/snr.hpp"
#include "arc/core/errors.hpp"

namespace arc {

using json = nlohmann::json;

enum class Task { gridworld_pi, car1d, planar_reach, planar_push, grad_accuracy, snr, theorem2 };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::gridworld_pi: return "gridworld_pi";
    case Task::car1d: return "car1d";
    case Task::planar_reach: return "planar_reach";
    case Task::planar_push: return "planar_push";
    case Task::grad_accuracy: return "grad_accuracy";
    case Task::snr: return "snr";
    case Task::theorem2: return "theorem2";
  }
  return "?";
}

inline std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::gridworld_pi, Task::car1d, Task::planar_reach, Task::planar_push, Task::grad_accuracy, Task::snr,
                 Task::theorem2})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

inline bool is_training_task(Task t) { return t == Task::car1d || t == Task::planar_reach || t == Task::planar_push; }

inline EnvKind env_of(Task t) {
  switch (t) {
    case Task::car1d: return EnvKind::car1d;
    case Task::planar_reach: return EnvKind::reach;
    case Task::planar_push: return EnvKind::push;
    default: throw ContractViolation("task " + std::string(to_string(t)) + " has no environment");
  }
}

struct ExperimentConfig {
  Task task = Task::gridworld_pi;
  AgentKind agent = AgentKind::sarc;
  std::string reward_kind = "fmax_rkl";  // gail | fmax_rkl | env
  std::vector<std::uint64_t> seeds{0};
  long max_env_steps = 25000;
  long eval_every = 1000;
  int eval_episodes = 20;
  json hyperparameters = json::object();  // fully resolved, one entry per known key

  bool operator==(const ExperimentConfig& o) const {
    return task == o.task && agent == o.agent && reward_kind == o.reward_kind && seeds == o.seeds &&
           max_env_steps == o.max_env_steps && eval_every == o.eval_every && eval_episodes == o.eval_episodes &&
           hyperparameters == o.hyperparameters;
  }
};

/// Known hyperparameters and their defaults for a task (and agent, where the
/// defaults differ between agents).
inline json default_hyperparameters(Task task, AgentKind agent) {
  if (is_training_task(task)) {
    const TrainConfig t = default_train_config(agent);
    return {{"policy_lr", t.policy_lr},
            {"critic_lr", t.critic_lr},
            {"alpha", t.alpha},
            {"gamma", t.gamma},
            {"zeta", t.zeta},
            {"batch_size", t.batch_size},
            {"buffer_capacity", t.buffer_capacity},
            {"update_every", t.update_every},
            {"disc_iterations", t.disc_iterations},
            {"agent_iterations", t.agent_iterations},
            {"critic_steps_per_policy_step", t.critic_steps_per_policy_step},
            {"update_after", t.update_after},
            {"random_steps", t.random_steps},
            {"expert_trajectories", t.expert_trajectories},
            {"env_noise", t.env_noise},
            {"normalize_observations", t.normalize_observations},
            {"hidden", t.hidden},
            {"disc_hidden", t.disc.hidden},
            {"disc_lr", t.disc.learning_rate},
            {"gp_lambda", t.disc.gp_lambda},
            {"logit_clip", t.disc.logit_clip},
            {"reward_scale", t.disc.reward_scale},
            {"disc_batch", t.disc_batch},
            {"bc_epochs", t.bc_epochs},
            {"bc_lr", t.bc_lr},
            {"bc_batch", t.bc_batch}};
  }
  switch (task) {
    case Task::gridworld_pi:
      return {{"width", 5}, {"height", 5}, {"goal_x", 4}, {"goal_y", 4}, {"gamma", 0.9}, {"tolerance", 1e-10}};
    case Task::grad_accuracy: {
      const GradAccuracyConfig g;
      return {{"epochs", g.epochs},       {"n_train", g.n_train},       {"n_test", g.n_test},
              {"horizon", g.horizon},     {"gamma", g.gamma},           {"agent_action", g.agent_action},
              {"hidden", g.hidden},       {"learning_rate", g.learning_rate}, {"batch", g.batch},
              {"fd_step", g.fd_step}};
    }
    case Task::snr:
      return {{"s_r", 1.0}, {"s_c", 1.0}, {"s_rc", 0.0}, {"snr_c", 1.0}, {"snr_q", 1.0}, {"n_samples", 1000000}};
    case Task::theorem2:
      return {{"n_configs", 20}, {"grid_points", 200001}, {"half_width", 2.0}};
    default: break;
  }
  return json::object();
}

namespace config_detail {

inline bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!e.is_number_integer()) return false;
    return true;
  }
  return false;
}

inline std::string kind_name(const json& def) {
  if (def.is_boolean()) return "a boolean";
  if (def.is_number_integer()) return "an integer";
  if (def.is_number()) return "a number";
  if (def.is_string()) return "a string";
  if (def.is_array()) return "an array of integers";
  return "a value";
}

template <class T>
T get_field(const json& j, const std::string& key, const T& fallback, std::vector<std::string>* log, bool (*check)(const json&),
            const char* expected) {
  if (!j.contains(key)) {
    if (log) log->push_back("default " + key + " = " + json(fallback).dump());
    return fallback;
  }
  if (!check(j.at(key))) throw ConfigError(key, std::string("expected ") + expected);
  return j.at(key).get<T>();
}

inline bool is_int(const json& v) { return v.is_number_integer(); }
inline bool is_str(const json& v) { return v.is_string(); }

}  // namespace config_detail

/// Validates a JSON object into a config. Missing fields take defaults, each
/// reported in `log`. Anything else that does not fit, such as an unknown key
/// or a wrong type, raises ConfigError naming the field.
inline ExperimentConfig parse_config(const json& j, std::vector<std::string>* log = nullptr) {
  using namespace config_detail;
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  static const std::set<std::string> known{"task",          "agent",         "reward_kind",    "seeds",
                                           "max_env_steps", "eval_every",    "eval_episodes", "hyperparameters"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError(k, "unknown key");

  if (!j.contains("task")) throw ConfigError("task", "missing required field");
  if (!j.at("task").is_string()) throw ConfigError("task", "expected a string");
  const auto task = parse_task(j.at("task").get<std::string>());
  if (!task) throw ConfigError("task", "unknown task '" + j.at("task").get<std::string>() + "'");

  ExperimentConfig c;
  c.task = *task;
  const bool training = is_training_task(c.task);
  if (!training) {
    for (const char* k : {"agent", "reward_kind", "max_env_steps", "eval_every", "eval_episodes"})
      if (j.contains(k)) throw ConfigError(k, "does not apply to task " + std::string(to_string(c.task)));
  }

  if (training) {
    const std::string agent = get_field<std::string>(j, "agent", "sarc", log, is_str, "a string");
    try {
      c.agent = parse_agent_kind(agent);
    } catch (const ContractViolation&) {
      throw ConfigError("agent", "unknown agent '" + agent + "'");
    }
    c.reward_kind = get_field<std::string>(j, "reward_kind", c.agent == AgentKind::bc ? "env" : "fmax_rkl", log, is_str,
                                           "a string");
    if (c.reward_kind != "gail" && c.reward_kind != "fmax_rkl" && c.reward_kind != "env")
      throw ConfigError("reward_kind", "expected gail, fmax_rkl or env");
    c.max_env_steps = get_field<long>(j, "max_env_steps", 25000L, log, is_int, "an integer");
    c.eval_every = get_field<long>(j, "eval_every", 1000L, log, is_int, "an integer");
    c.eval_episodes = get_field<int>(j, "eval_episodes", 20, log, is_int, "an integer");
    if (c.max_env_steps < 0) throw ConfigError("max_env_steps", "must be non-negative");
    if (c.eval_every < 1) throw ConfigError("eval_every", "must be at least 1");
    if (c.eval_episodes < 1) throw ConfigError("eval_episodes", "must be at least 1");
    if (c.agent == AgentKind::bc && c.reward_kind != "env")
      throw ConfigError("reward_kind", "bc learns from demonstrations only; use reward_kind env");
    if (c.reward_kind == "env" && c.agent != AgentKind::bc && c.task == Task::planar_push)
      throw ConfigError("reward_kind", "the environment reward is only differentiable on car1d and planar_reach");
  }

  const std::vector<std::uint64_t> default_seeds =
      c.task == Task::grad_accuracy ? std::vector<std::uint64_t>{0, 1, 2, 3, 4} : std::vector<std::uint64_t>{0};
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (!s.is_array()) throw ConfigError("seeds", "expected an array of non-negative integers");
    c.seeds.clear();
    for (const auto& e : s) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw ConfigError("seeds", "expected an array of non-negative integers");
      c.seeds.push_back(e.get<std::uint64_t>());
    }
  } else {
    c.seeds = default_seeds;
    if (log) log->push_back("default seeds = " + json(c.seeds).dump());
  }
  if (c.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (c.task == Task::grad_accuracy && c.seeds.size() < 3) throw ConfigError("seeds", "grad_accuracy needs at least 3 seeds");

  c.hyperparameters = default_hyperparameters(c.task, c.agent);
  json given = json::object();
  if (j.contains("hyperparameters")) {
    given = j.at("hyperparameters");
    if (!given.is_object()) throw ConfigError("hyperparameters", "expected an object");
  }
  for (const auto& [k, v] : given.items()) {
    if (!c.hyperparameters.contains(k)) throw ConfigError(k, "unknown hyperparameter for task " + std::string(to_string(c.task)));
    const json& def = c.hyperparameters.at(k);
    if (!same_kind(def, v)) throw ConfigError(k, "expected " + kind_name(def));
    // integers given for real-valued keys are stored as reals so equal configs compare equal
    c.hyperparameters[k] = def.is_number_float() ? json(v.get<double>()) : v;
  }
  if (log)
    for (const auto& [k, v] : c.hyperparameters.items())
      if (!given.contains(k)) log->push_back("default " + k + " = " + v.dump());
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path, std::vector<std::string>* log = nullptr) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot open " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, log);
}

/// Canonical form: every applicable field present, keys sorted.
inline json to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = std::string(to_string(c.task));
  j["seeds"] = c.seeds;
  j["hyperparameters"] = c.hyperparameters;
  if (is_training_task(c.task)) {
    j["agent"] = std::string(to_string(c.agent));
    j["reward_kind"] = c.reward_kind;
    j["max_env_steps"] = c.max_env_steps;
    j["eval_every"] = c.eval_every;
    j["eval_episodes"] = c.eval_episodes;
  }
  return j;
}

/// FNV-1a over the canonical dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Training settings for one seed of a training task.
inline TrainConfig to_train_config(const ExperimentConfig& c, std::uint64_t seed) {
  require(is_training_task(c.task), "to_train_config: not a training task");
  const json& h = c.hyperparameters;
  TrainConfig t = default_train_config(c.agent);
  t.env = env_of(c.task);
  t.agent = c.agent;
  if (c.reward_kind == "env")
    t.reward.reset();
  else
    t.reward = parse_reward_kind(c.reward_kind);
  t.seed = seed;
  t.max_env_steps = c.max_env_steps;
  t.eval_every = c.eval_every;
  t.eval_episodes = c.eval_episodes;
  t.policy_lr = h.at("policy_lr");
  t.critic_lr = h.at("critic_lr");
  t.alpha = h.at("alpha");
  t.gamma = h.at("gamma");
  t.zeta = h.at("zeta");
  t.batch_size = h.at("batch_size");
  t.buffer_capacity = h.at("buffer_capacity");
  t.update_every = h.at("update_every");
  t.disc_iterations = h.at("disc_iterations");
  t.agent_iterations = h.at("agent_iterations");
  t.critic_steps_per_policy_step = h.at("critic_steps_per_policy_step");
  t.update_after = h.at("update_after");
  t.random_steps = h.at("random_steps");
  t.expert_trajectories = h.at("expert_trajectories");
  t.env_noise = h.at("env_noise");
  t.normalize_observations = h.at("normalize_observations");
  t.hidden = h.at("hidden").get<std::vector<int>>();
  t.disc.hidden = h.at("disc_hidden").get<std::vector<int>>();
  t.disc.learning_rate = h.at("disc_lr");
  t.disc.gp_lambda = h.at("gp_lambda");
  t.disc.logit_clip = h.at("logit_clip");
  t.disc.reward_scale = h.at("reward_scale");
  t.disc_batch = h.at("disc_batch");
  t.bc_epochs = h.at("bc_epochs");
  t.bc_lr = h.at("bc_lr");
  t.bc_batch = h.at("bc_batch");
  return t;
}

inline GradAccuracyConfig to_grad_accuracy_config(const ExperimentConfig& c) {
  require(c.task == Task::grad_accuracy, "to_grad_accuracy_config: wrong task");
  const json& h = c.hyperparameters;
  GradAccuracyConfig g;
  g.seeds = c.seeds;
  g.epochs = h.at("epochs").get<std::vector<int>>();
  g.n_train = h.at("n_train");
  g.n_test = h.at("n_test");
  g.horizon = h.at("horizon");
  g.gamma = h.at("gamma");
  g.agent_action = h.at("agent_action");
  g.hidden = h.at("hidden").get<std::vector<int>>();
  g.learning_rate = h.at("learning_rate");
  g.batch = h.at("batch");
  g.fd_step = h.at("fd_step");
  return g;
}

inline SnrInputs to_snr_inputs(const ExperimentConfig& c) {
  require(c.task == Task::snr, "to_snr_inputs: wrong task");
  const json& h = c.hyperparameters;
  return SnrInputs{h.at("s_r"), h.at("s_c"), h.at("s_rc"), h.at("snr_c"), h.at("snr_q")};
}

}  // namespace arc
