#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "arc/core/adam.hpp"
#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"
#include "arc/core/normalizer.hpp"
#include "arc/core/rng.hpp"

namespace arc {

struct PolicyConfig {
  std::vector<int> hidden{64, 64};
  HiddenActivation activation = HiddenActivation::relu;
  double learning_rate = 1e-4;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

/// Everything a reparameterized batch sample needs for its backward pass.
struct PolicySample {
  ForwardCache cache;
  Matrix noise;     // xi
  Matrix log_std;   // clamped
  Matrix std;
  Matrix pre_tanh;  // u = mean + std * xi
  Matrix squashed;  // tanh(u)
  Matrix actions;   // scale * tanh(u)
  Eigen::RowVectorXd log_prob;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> log_std_clamped;
};

/// a = scale * tanh(mean(s) + std(s) * xi). One network emits [mean; log_std].
class SquashedGaussianPolicy {
 public:
  SquashedGaussianPolicy() = default;

  SquashedGaussianPolicy(int state_dim, int action_dim, double action_scale, PolicyConfig cfg, std::uint64_t seed,
                         std::optional<Normalizer> obs_normalizer = std::nullopt, bool zero_init = false)
      : action_dim_(action_dim),
        scale_(action_scale),
        cfg_(std::move(cfg)),
        net_(layer_sizes(state_dim, cfg_.hidden, 2 * action_dim), cfg_.activation),
        norm_(obs_normalizer ? *obs_normalizer : Normalizer::identity(state_dim)) {
    require(state_dim > 0 && action_dim > 0, "SquashedGaussianPolicy: dimensions must be positive");
    require(action_scale > 0.0, "SquashedGaussianPolicy: action_scale must be positive");
    require(cfg_.log_std_min < cfg_.log_std_max, "SquashedGaussianPolicy: bad log-std bounds");
    require(norm_.dim() == state_dim, "SquashedGaussianPolicy: normalizer dimension mismatch");
    if (!zero_init) {
      Rng init(seed);
      net_.init_glorot(init);
    }
    reset_optimizer(cfg_.learning_rate);
  }

  int state_dim() const { return net_.input_dim(); }
  int action_dim() const { return action_dim_; }
  double action_scale() const { return scale_; }
  const PolicyConfig& config() const { return cfg_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  AdamState& optimizer() { return opt_; }
  const Normalizer& obs_normalizer() const { return norm_; }
  void reset_optimizer(double lr) { opt_ = AdamState(net_, AdamConfig{lr}); }

  /// scale * tanh(mean(s)) for each column.
  Matrix deterministic(const Matrix& states) const {
    const Matrix out = net_.forward(norm_.apply(states));
    return scale_ * tanh_elementwise(out.topRows(action_dim_));
  }

  /// Reparameterized sample for the given standard-normal noise (action_dim x B).
  PolicySample sample(const Matrix& states, const Matrix& noise) const {
    require(noise.rows() == action_dim_ && noise.cols() == states.cols(), "SquashedGaussianPolicy: noise shape");
    PolicySample ps;
    const Matrix out = net_.forward(norm_.apply(states), ps.cache);
    const Matrix raw_log_std = out.bottomRows(action_dim_);
    ps.log_std = raw_log_std.cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
    ps.log_std_clamped = (raw_log_std.array() < cfg_.log_std_min) || (raw_log_std.array() > cfg_.log_std_max);
    ps.std = ps.log_std.array().exp().matrix();
    ps.noise = noise;
    ps.pre_tanh = out.topRows(action_dim_) + ps.std.cwiseProduct(noise);
    ps.squashed = tanh_elementwise(ps.pre_tanh);
    ps.actions = scale_ * ps.squashed;
    // log N(u; mean, std) - log |da/du|, with log(1 - tanh^2 u) = 2 (log 2 - u - softplus(-2u)).
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    ps.log_prob.resize(states.cols());
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
      double lp = 0.0;
      for (int i = 0; i < action_dim_; ++i) {
        const double u = ps.pre_tanh(i, j), xi = noise(i, j);
        const double log_one_minus_t2 = 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
        lp += -0.5 * xi * xi - ps.log_std(i, j) - half_log_2pi - std::log(scale_) - log_one_minus_t2;
      }
      ps.log_prob(j) = lp;
    }
    return ps;
  }

  PolicySample sample(const Matrix& states, Rng& rng) const { return sample(states, standard_normal(rng, states.cols())); }

  Matrix standard_normal(Rng& rng, Eigen::Index batch) const {
    Matrix xi(action_dim_, batch);
    for (Eigen::Index j = 0; j < batch; ++j)
      for (int i = 0; i < action_dim_; ++i) xi(i, j) = rng.normal();
    return xi;
  }

  /// Parameter gradient of sum_j (d_action(:,j) . a_j + d_log_prob(j) * log pi(a_j|s_j)), noise held fixed.
  GradTape backward(const PolicySample& ps, const Matrix& d_action, const Eigen::RowVectorXd& d_log_prob) const {
    const Eigen::Index B = ps.actions.cols();
    require(d_action.rows() == action_dim_ && d_action.cols() == B && d_log_prob.size() == B,
            "SquashedGaussianPolicy::backward: cotangent shape mismatch");
    Matrix cot(2 * action_dim_, B);
    for (Eigen::Index j = 0; j < B; ++j) {
      for (int i = 0; i < action_dim_; ++i) {
        const double t = ps.squashed(i, j);
        const double da_du = scale_ * (1.0 - t * t);
        const double dlp_du = 2.0 * t;
        const double du = d_action(i, j) * da_du + d_log_prob(j) * dlp_du;
        cot(i, j) = du;
        const double dls = ps.log_std_clamped(i, j) ? 0.0 : du * ps.std(i, j) * ps.noise(i, j) - d_log_prob(j);
        cot(action_dim_ + i, j) = dls;
      }
    }
    return net_.backward(ps.cache, cot);
  }

  /// Single-state action; `log_prob` is only meaningful for stochastic draws.
  std::pair<std::vector<double>, double> sample_action(std::span<const double> s, bool deterministic_mode,
                                                       Rng& rng) const {
    const Matrix st = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
    if (deterministic_mode) {
      const Matrix a = deterministic(st);
      return {std::vector<double>(a.data(), a.data() + a.size()), 0.0};
    }
    const PolicySample ps = sample(st, rng);
    return {std::vector<double>(ps.actions.data(), ps.actions.data() + ps.actions.size()), ps.log_prob(0)};
  }

  /// Log-density of given actions (|a| < scale per dimension).
  Eigen::RowVectorXd log_prob_of(const Matrix& states, const Matrix& actions) const {
    const Matrix out = net_.forward(norm_.apply(states));
    const Matrix log_std = out.bottomRows(action_dim_).cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
    Matrix noise(action_dim_, actions.cols());
    for (Eigen::Index j = 0; j < actions.cols(); ++j)
      for (int i = 0; i < action_dim_; ++i) {
        const double u = std::atanh(actions(i, j) / scale_);
        noise(i, j) = (u - out(i, j)) / std::exp(log_std(i, j));
      }
    return sample(states, noise).log_prob;
  }

 private:
  static double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

  int action_dim_ = 0;
  double scale_ = 1.0;
  PolicyConfig cfg_;
  Mlp net_;
  Normalizer norm_;
  AdamState opt_;
};

}  // namespace arc
