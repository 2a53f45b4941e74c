#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arc/core/adam.hpp"
#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"
#include "arc/core/normalizer.hpp"
#include "arc/core/rng.hpp"

namespace arc {

enum class RewardKind { gail, fmax_rkl };

inline std::string_view to_string(RewardKind k) { return k == RewardKind::gail ? "gail" : "fmax_rkl"; }

inline RewardKind parse_reward_kind(std::string_view s) {
  if (s == "gail") return RewardKind::gail;
  if (s == "fmax_rkl") return RewardKind::fmax_rkl;
  throw ContractViolation("unknown reward kind '" + std::string(s) + "'");
}

/// Numerically stable log(sigmoid(x)).
inline double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct DiscriminatorConfig {
  std::vector<int> hidden{128, 128};
  double logit_clip = 10.0;
  double learning_rate = 3e-4;
  double gp_lambda = 4.0;  // 0 switches the gradient penalty off
  double reward_scale = 1.0;
};

/// A batch of (state, action) columns.
struct SABatch {
  Matrix states;
  Matrix actions;

  Eigen::Index size() const { return states.cols(); }
};

/// Classifier D(s,a) = sigmoid(logit(s,a)) of "expert" vs "agent" pairs.
/// Inputs pass through `input_normalizer` before the network.
class Discriminator {
 public:
  Discriminator() = default;

  Discriminator(int state_dim, int action_dim, DiscriminatorConfig cfg, std::uint64_t seed,
                std::optional<Normalizer> input_normalizer = std::nullopt, bool zero_init = false)
      : state_dim_(state_dim),
        action_dim_(action_dim),
        cfg_(std::move(cfg)),
        net_(layer_sizes(state_dim + action_dim, cfg_.hidden, 1), HiddenActivation::tanh, OutputActivation::clip,
             ClipBounds{-cfg_.logit_clip, cfg_.logit_clip}),
        norm_(input_normalizer ? *input_normalizer : Normalizer::identity(state_dim + action_dim)),
        rng_(derive_seed(seed, Stream::discriminator_init, 1)) {
    require(state_dim > 0 && action_dim > 0, "Discriminator: dimensions must be positive");
    require(cfg_.logit_clip > 0.0, "Discriminator: logit_clip must be positive");
    require(cfg_.gp_lambda >= 0.0, "Discriminator: gp_lambda must be non-negative");
    require(norm_.dim() == state_dim + action_dim, "Discriminator: normalizer dimension mismatch");
    if (!zero_init) {
      Rng init(derive_seed(seed, Stream::discriminator_init));
      net_.init_glorot(init);
    }
    opt_ = AdamState(net_, AdamConfig{cfg_.learning_rate});
  }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const DiscriminatorConfig& config() const { return cfg_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  AdamState& optimizer() { return opt_; }
  const Normalizer& input_normalizer() const { return norm_; }
  Rng& rng() { return rng_; }

  /// Normalized network input [s; a] for a batch.
  Matrix network_input(const Matrix& states, const Matrix& actions) const {
    require(states.rows() == state_dim_ && actions.rows() == action_dim_ && states.cols() == actions.cols(),
            "Discriminator: batch shape mismatch");
    Matrix x(state_dim_ + action_dim_, states.cols());
    x.topRows(state_dim_) = states;
    x.bottomRows(action_dim_) = actions;
    return norm_.apply(x);
  }

  Eigen::RowVectorXd logits(const Matrix& states, const Matrix& actions) const {
    return net_.forward(network_input(states, actions)).row(0);
  }

  double logit(std::span<const double> s, std::span<const double> a) const {
    return logits(column(s), column(a))(0);
  }

  static Matrix column(std::span<const double> v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  DiscriminatorConfig cfg_;
  Mlp net_;
  Normalizer norm_;
  AdamState opt_;
  Rng rng_;
};

struct GradientPenalty {
  double value = 0.0;
  GradTape grads;
};

/// lambda * mean_j (|d logit / d x_j| - 1)^2 for a scalar-output network and
/// its gradient w.r.t. every parameter. Second-order terms are propagated by
/// differentiating the input-gradient pass itself.
inline GradientPenalty input_gradient_penalty(const Mlp& net, const Matrix& x, double lambda) {
  require(net.output_dim() == 1, "input_gradient_penalty: network must have scalar output");
  const std::size_t L = net.num_layers();
  const Eigen::Index B = x.cols();
  require(B > 0, "input_gradient_penalty: empty batch");
  ForwardCache cache;
  net.forward(x, cache);
  const auto& W = net.weights();
  const auto& z = cache.pre_activations;

  // Input-gradient pass: delta[l] is d logit / d z_l, u[l] = W_l^T delta[l].
  std::vector<Matrix> delta(L), u(L);
  delta[L - 1] = net.activation_derivative(z[L - 1], true);
  for (std::size_t l = L - 1; l > 0; --l) {
    u[l] = W[l].transpose() * delta[l];
    delta[l - 1] = u[l].cwiseProduct(net.hidden_derivative(cache, l - 1));
  }
  const Matrix g = W[0].transpose() * delta[0];
  const Eigen::RowVectorXd norms = g.colwise().norm();

  GradientPenalty out;
  out.grads = net.zero_tape(B);
  Matrix g_bar = Matrix::Zero(g.rows(), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const double excess = norms(j) - 1.0;
    out.value += excess * excess;
    if (norms(j) > 0.0) g_bar.col(j) = (2.0 * lambda / static_cast<double>(B)) * excess / norms(j) * g.col(j);
  }
  out.value *= lambda / static_cast<double>(B);

  auto& Wg = out.grads.weight_grads;
  auto& bg = out.grads.bias_grads;
  std::vector<Matrix> z_bar(L);
  for (std::size_t l = 0; l < L; ++l) z_bar[l] = Matrix::Zero(z[l].rows(), B);

  // Reverse through the input-gradient pass.
  Wg[0] += delta[0] * g_bar.transpose();
  Matrix delta_bar = W[0] * g_bar;
  for (std::size_t l = 1; l < L; ++l) {
    z_bar[l - 1] += net.hidden_second_derivative(cache, l - 1).cwiseProduct(u[l]).cwiseProduct(delta_bar);
    const Matrix u_bar = net.hidden_derivative(cache, l - 1).cwiseProduct(delta_bar);
    Wg[l] += delta[l] * u_bar.transpose();
    delta_bar = W[l] * u_bar;
  }
  z_bar[L - 1] += net.activation_second_derivative(z[L - 1], true).cwiseProduct(delta_bar);

  // Reverse through the forward pass.
  for (std::size_t l = L; l-- > 0;) {
    Wg[l] += z_bar[l] * cache.layer_inputs[l].transpose();
    bg[l] += z_bar[l].rowwise().sum();
    if (l > 0) z_bar[l - 1] += (W[l].transpose() * z_bar[l]).cwiseProduct(net.hidden_derivative(cache, l - 1));
  }
  return out;
}

/// One Adam ascent step on sum log D(expert) + sum log(1 - D(agent)), with the
/// per-batch means as the step direction plus the optional gradient penalty on
/// random interpolates of paired expert/agent inputs. Returns the objective
/// (sums, penalty excluded) evaluated before the step.
inline double discriminator_update(Discriminator& disc, const SABatch& expert, const SABatch& agent) {
  require(expert.size() > 0 && agent.size() > 0, "discriminator_update: batches must be non-empty");
  const Eigen::Index ne = expert.size(), na = agent.size();
  Matrix x(disc.state_dim() + disc.action_dim(), ne + na);
  x.leftCols(ne) = disc.network_input(expert.states, expert.actions);
  x.rightCols(na) = disc.network_input(agent.states, agent.actions);

  ForwardCache cache;
  const Eigen::RowVectorXd logit = disc.net().forward(x, cache).row(0);
  double objective = 0.0;
  Matrix cot(1, ne + na);
  for (Eigen::Index j = 0; j < ne; ++j) {
    objective += log_sigmoid(logit(j));
    cot(0, j) = -sigmoid(-logit(j)) / static_cast<double>(ne);
  }
  for (Eigen::Index j = ne; j < ne + na; ++j) {
    objective += log_sigmoid(-logit(j));
    cot(0, j) = sigmoid(logit(j)) / static_cast<double>(na);
  }
  if (!std::isfinite(objective)) throw NumericalError("discriminator_update: non-finite objective");
  GradTape tape = disc.net().backward(cache, cot);

  const double lambda = disc.config().gp_lambda;
  if (lambda > 0.0) {
    const Eigen::Index n = std::min(ne, na);
    Matrix mix(x.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double eps = disc.rng().uniform(0.0, 1.0);
      mix.col(j) = eps * x.col(j) + (1.0 - eps) * x.col(ne + j);
    }
    GradientPenalty gp = input_gradient_penalty(disc.net(), mix, lambda);
    for (std::size_t l = 0; l < tape.weight_grads.size(); ++l) {
      tape.weight_grads[l] += gp.grads.weight_grads[l];
      tape.bias_grads[l] += gp.grads.bias_grads[l];
    }
  }
  adam_step(disc.net(), tape, disc.optimizer());
  return objective;
}

/// Reward h(D) for a batch, times the configured reward scale.
inline Eigen::RowVectorXd rewards(const Discriminator& disc, const Matrix& states, const Matrix& actions,
                                  RewardKind kind) {
  Eigen::RowVectorXd r = disc.logits(states, actions);
  if (kind == RewardKind::gail) r = r.unaryExpr([](double v) { return log_sigmoid(v); });
  return disc.config().reward_scale * r;
}

inline double reward(const Discriminator& disc, std::span<const double> s, std::span<const double> a,
                     RewardKind kind) {
  return rewards(disc, Discriminator::column(s), Discriminator::column(a), kind)(0);
}

/// Batched rewards plus d reward / d action (action_dim x B). The gradient is
/// zero wherever the logit clip is active.
inline Eigen::RowVectorXd rewards_and_action_grad(const Discriminator& disc, const Matrix& states,
                                                  const Matrix& actions, RewardKind kind, Matrix& action_grad) {
  ForwardCache cache;
  const Eigen::RowVectorXd logit = disc.net().forward(disc.network_input(states, actions), cache).row(0);
  const double scale = disc.config().reward_scale;
  Eigen::RowVectorXd r(logit.size());
  Matrix cot(1, logit.size());
  for (Eigen::Index j = 0; j < logit.size(); ++j) {
    if (kind == RewardKind::gail) {
      r(j) = scale * log_sigmoid(logit(j));
      cot(0, j) = scale * sigmoid(-logit(j));
    } else {
      r(j) = scale * logit(j);
      cot(0, j) = scale;
    }
  }
  const GradTape tape = disc.net().backward(cache, cot);
  action_grad = disc.input_normalizer().pullback(tape.input_grad).bottomRows(disc.action_dim());
  return r;
}

inline Vector reward_grad_action(const Discriminator& disc, std::span<const double> s, std::span<const double> a,
                                 RewardKind kind) {
  Matrix g;
  rewards_and_action_grad(disc, Discriminator::column(s), Discriminator::column(a), kind, g);
  return g.col(0);
}

}  // namespace arc
