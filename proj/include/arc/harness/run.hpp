#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arc/agents/train.hpp"
#include "arc/analysis/grad_accuracy.hpp"
#include "arc/analysis/snr.hpp"
#include "arc/analysis/theorem2.hpp"
#include "arc/core/snapshot.hpp"
#include "arc/dp/policy_iteration.hpp"
#include "arc/env/tabular_mdp.hpp"
#include "arc/harness/config.hpp"

namespace arc {

/// One seed's output: the CSV table plus a JSON summary.
struct ExperimentRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string csv;
  json summary = json::object();
  double wall_time_s = 0.0;
  std::optional<RunRecord> run;                  // training tasks only
  std::optional<SquashedGaussianPolicy> policy;  // training tasks only
};

/// Settings that are legal field by field but cannot run together. Raised
/// before any work starts.
inline void check_compatibility(const ExperimentConfig& c) {
  if (!is_training_task(c.task)) {
    if (c.task == Task::grad_accuracy) {
      try {
        validate(to_grad_accuracy_config(c));
      } catch (const ContractViolation& e) {
        throw ConfigError("hyperparameters", e.what());
      }
    }
    if (c.task == Task::snr) {
      const SnrInputs in = to_snr_inputs(c);
      if (!(in.s_c > 0.0)) throw ConfigError("s_c", "must be positive");
      if (in.s_r < 0.0) throw ConfigError("s_r", "must be non-negative");
      if (in.s_rc * in.s_rc > in.s_r * in.s_c) throw ConfigError("s_rc", "violates s_rc^2 <= s_r s_c");
      if (!(in.snr_c > 0.0) || !(in.snr_q > 0.0)) throw ConfigError("snr_c", "snr values must be positive");
      if (c.hyperparameters.at("n_samples").get<long>() < 10000) throw ConfigError("n_samples", "must be at least 10000");
    }
    if (c.task == Task::theorem2) {
      if (c.hyperparameters.at("n_configs").get<int>() < 1) throw ConfigError("n_configs", "must be positive");
      if (c.hyperparameters.at("grid_points").get<int>() < 2) throw ConfigError("grid_points", "must be at least 2");
      if (!(c.hyperparameters.at("half_width").get<double>() > 0.0)) throw ConfigError("half_width", "must be positive");
    }
    return;
  }
  try {
    validate(to_train_config(c, c.seeds.front()));
  } catch (const ContractViolation& e) {
    throw ConfigError("hyperparameters", e.what());
  }
}

namespace run_detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline ExperimentRecord run_gridworld(const ExperimentConfig& c, std::uint64_t seed) {
  const json& h = c.hyperparameters;
  const TabularMDP mdp = make_gridworld(h.at("width"), h.at("height"), GridCell{h.at("goal_x"), h.at("goal_y")}, h.at("gamma"));
  PolicyIterationOptions opts;
  opts.tol = h.at("tolerance");
  const PolicyIterationResult rc = policy_iteration(mdp, CriticKind::C, opts);
  const PolicyIterationResult rq = policy_iteration(mdp, CriticKind::Q, opts);
  double residual = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      residual = std::max(residual, std::abs(rq.values(s, a) - (mdp.r(s, a) + rc.values(s, a))));
  ExperimentRecord rec;
  rec.seed = seed;
  rec.csv = "improvement_steps_c,improvement_steps_q,policies_equal,q_minus_r_plus_c_inf\n" +
            std::to_string(rc.improvement_steps) + ',' + std::to_string(rq.improvement_steps) + ',' +
            (rc.policy == rq.policy ? "1" : "0") + ',' + fmt(residual) + '\n';
  rec.summary = {{"improvement_steps_c", rc.improvement_steps},
                 {"improvement_steps_q", rq.improvement_steps},
                 {"policies_equal", rc.policy == rq.policy},
                 {"q_minus_r_plus_c_inf", residual},
                 {"mean_value_history_c", rc.value_history}};
  return rec;
}

inline ExperimentRecord run_snr(const ExperimentConfig& c, std::uint64_t seed) {
  const SnrInputs in = to_snr_inputs(c);
  const long n = c.hyperparameters.at("n_samples");
  const double net = net_snr(in);
  const auto thr = snr_threshold(in);
  const double mc = monte_carlo_snr(in, n, derive_seed(seed, Stream::data));
  ExperimentRecord rec;
  rec.seed = seed;
  rec.csv = "s_r,s_c,s_rc,snr_c,snr_q,case,net_snr,threshold,monte_carlo_snr,n_samples\n" + fmt(in.s_r) + ',' +
            fmt(in.s_c) + ',' + fmt(in.s_rc) + ',' + fmt(in.snr_c) + ',' + fmt(in.snr_q) + ',' +
            std::to_string(static_cast<int>(classify(in))) + ',' + fmt(net) + ',' + (thr ? fmt(*thr) : "undefined") +
            ',' + fmt(mc) + ',' + std::to_string(n) + '\n';
  rec.summary = {{"case", static_cast<int>(classify(in))},
                 {"net_snr", net},
                 {"threshold", thr ? json(*thr) : json("undefined")},
                 {"monte_carlo_snr", std::isinf(mc) ? json("inf") : json(mc)}};
  return rec;
}

inline ExperimentRecord run_theorem2(const ExperimentConfig& c, std::uint64_t seed) {
  const int n = c.hyperparameters.at("n_configs");
  const int grid = c.hyperparameters.at("grid_points");
  const double half = c.hyperparameters.at("half_width");
  Rng rng(derive_seed(seed, Stream::data));
  std::ostringstream os;
  os << "config,epsilon,big_d,x0,b,sup_value_error,slope_error,bound_holds\n" << std::setprecision(17);
  int held = 0;
  for (int k = 0; k < n; ++k) {
    const double eps = rng.uniform(1e-3, 1.0), d = rng.uniform(0.1, 50.0), x0 = rng.uniform(-1.0, 1.0);
    const auto g = build_adversarial_approx([](double x) { return std::sin(3.0 * x) + x * x; },
                                            [](double x) { return 3.0 * std::cos(3.0 * x) + 2.0 * x; }, eps, d, x0);
    const ApproxCheck ck = grid_check(g, x0 - half, x0 + half, grid);
    const bool ok = ck.sup_value_error <= eps && std::abs(ck.slope_error_at_x0 - 2.0 * d) <= 1e-9 * std::max(1.0, 2.0 * d);
    held += ok;
    os << k << ',' << eps << ',' << d << ',' << x0 << ',' << g.b() << ',' << ck.sup_value_error << ','
       << ck.slope_error_at_x0 << ',' << (ok ? 1 : 0) << '\n';
  }
  ExperimentRecord rec;
  rec.seed = seed;
  rec.csv = os.str();
  rec.summary = {{"n_configs", n}, {"bounds_held", held}};
  return rec;
}

inline ExperimentRecord run_training(const ExperimentConfig& c, std::uint64_t seed) {
  ExperimentRecord rec;
  rec.seed = seed;
  std::optional<SquashedGaussianPolicy> policy;
  RunRecord run = train_ail(to_train_config(c, seed), &policy);
  rec.csv = run_csv(run);
  rec.summary = {{"final_return", run.rows.empty() ? json(nullptr) : json(run.final_return())},
                 {"final_std", run.rows.empty() ? json(nullptr) : json(run.rows.back().std_return)},
                 {"evaluations", run.rows.size()},
                 {"wall_time_s", run.wall_time_s}};
  rec.run = std::move(run);
  rec.policy = std::move(policy);
  return rec;
}

/// Policy sidecar: what is needed to rebuild the policy around a snapshot.
inline json policy_metadata(const SquashedGaussianPolicy& p) {
  const Normalizer& n = p.obs_normalizer();
  return {{"state_dim", p.state_dim()},
          {"action_dim", p.action_dim()},
          {"action_scale", p.action_scale()},
          {"obs_shift", std::vector<double>(n.shift.data(), n.shift.data() + n.shift.size())},
          {"obs_scale", std::vector<double>(n.scale.data(), n.scale.data() + n.scale.size())}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

}  // namespace run_detail

/// Rebuilds a policy from a snapshot and its metadata sidecar.
inline SquashedGaussianPolicy load_policy(const std::string& snapshot_path, const std::string& metadata_path) {
  std::ifstream is(metadata_path);
  if (!is) throw ConfigError("--policy", "cannot open " + metadata_path);
  const json meta = json::parse(is);
  Mlp net = load_snapshot(snapshot_path);
  const int sd = meta.at("state_dim"), ad = meta.at("action_dim");
  require(net.input_dim() == sd && net.output_dim() == 2 * ad, "load_policy: snapshot does not match metadata");
  const auto shift = meta.at("obs_shift").get<std::vector<double>>();
  const auto scale = meta.at("obs_scale").get<std::vector<double>>();
  const Normalizer norm{Eigen::Map<const Vector>(shift.data(), sd), Eigen::Map<const Vector>(scale.data(), sd)};
  PolicyConfig cfg;
  cfg.activation = net.hidden_activation();
  const auto& sizes = net.layer_sizes();
  cfg.hidden.assign(sizes.begin() + 1, sizes.end() - 1);
  SquashedGaussianPolicy p(sd, ad, meta.at("action_scale"), cfg, 0, norm, true);
  p.net() = std::move(net);
  return p;
}

/// Discriminator description written next to adversarial runs.
inline json discriminator_sidecar(const ExperimentConfig& c) {
  const json& h = c.hyperparameters;
  return {{"kind", c.reward_kind}, {"clip", h.at("logit_clip")}, {"lambda", h.at("gp_lambda")}};
}

/// Runs every seed and, when `out_root` is set, writes
/// <out_root>/<config_hash>/{config.json, seed_<s>.csv, seed_<s>.json, summary.json}
/// plus policy snapshots and the discriminator sidecar for training tasks.
inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& c,
                                                    const std::optional<std::filesystem::path>& out_root = std::nullopt) {
  check_compatibility(c);
  const std::string hash = config_hash(c);
  std::vector<ExperimentRecord> records;

  if (c.task == Task::grad_accuracy) {
    const auto t0 = std::chrono::steady_clock::now();
    const GradAccuracyResult res = gradient_accuracy_experiment(to_grad_accuracy_config(c));
    const double wall = run_detail::seconds_since(t0);
    for (std::uint64_t seed : c.seeds) {
      GradAccuracyResult one;
      one.value_range = res.value_range;
      for (const auto& r : res.rows)
        if (r.seed == seed) one.rows.push_back(r);
      ExperimentRecord rec;
      rec.seed = seed;
      rec.csv = grad_accuracy_csv(one);
      rec.wall_time_s = wall / static_cast<double>(c.seeds.size());
      records.push_back(std::move(rec));
    }
    json per_epoch = json::array();
    for (const auto& s : summarize(res))
      per_epoch.push_back({{"epoch", s.epoch},
                           {"q_value_mae", s.q_value_mae},
                           {"q_grad_mae", s.q_grad_mae},
                           {"r_plus_c_value_mae", s.rc_value_mae},
                           {"r_plus_c_grad_mae", s.rc_grad_mae}});
    const json meta = {{"horizon", c.hyperparameters.at("horizon")},
                       {"gamma", c.hyperparameters.at("gamma")},
                       {"agent_action", c.hyperparameters.at("agent_action")},
                       {"value_range", res.value_range},
                       {"per_epoch", per_epoch}};
    for (auto& r : records) r.summary = meta;
    if (out_root) {
      const auto dir = *out_root / hash;
      std::filesystem::create_directories(dir);
      run_detail::write_text(dir / "grad_accuracy.csv", grad_accuracy_csv(res));
    }
  } else {
    for (std::uint64_t seed : c.seeds) {
      const auto t0 = std::chrono::steady_clock::now();
      ExperimentRecord rec;
      switch (c.task) {
        case Task::gridworld_pi: rec = run_detail::run_gridworld(c, seed); break;
        case Task::snr: rec = run_detail::run_snr(c, seed); break;
        case Task::theorem2: rec = run_detail::run_theorem2(c, seed); break;
        default: rec = run_detail::run_training(c, seed); break;
      }
      rec.wall_time_s = run_detail::seconds_since(t0);
      records.push_back(std::move(rec));
    }
  }
  for (auto& r : records) {
    r.config_hash = hash;
    if (r.run) r.run->config_hash = hash;
  }

  if (out_root) {
    const auto dir = *out_root / hash;
    std::filesystem::create_directories(dir);
    run_detail::write_text(dir / "config.json", to_json(c).dump(2) + "\n");
    json summary = {{"config_hash", hash}, {"task", std::string(to_string(c.task))}, {"seeds", json::array()}};
    for (const auto& r : records) {
      const std::string stem = "seed_" + std::to_string(r.seed);
      run_detail::write_text(dir / (stem + ".csv"), r.csv);
      json s = r.summary;
      s["seed"] = r.seed;
      s["config_hash"] = hash;
      s["wall_time_s"] = r.wall_time_s;
      run_detail::write_text(dir / (stem + ".json"), s.dump(2) + "\n");
      summary["seeds"].push_back(s);
      if (r.policy) {
        save_snapshot((dir / ("policy_" + stem + ".mlp")).string(), r.policy->net());
        run_detail::write_text(dir / ("policy_" + stem + ".json"), run_detail::policy_metadata(*r.policy).dump(2) + "\n");
      }
    }
    if (is_training_task(c.task) && c.reward_kind != "env")
      run_detail::write_text(dir / "discriminator.json", discriminator_sidecar(c).dump(2) + "\n");
    run_detail::write_text(dir / "summary.json", summary.dump(2) + "\n");
  }
  return records;
}

}  // namespace arc
