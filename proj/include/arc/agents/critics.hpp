#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

#include "arc/core/adam.hpp"
#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"
#include "arc/core/normalizer.hpp"
#include "arc/core/rng.hpp"
#include "arc/dp/policy_iteration.hpp"

namespace arc {

struct CriticConfig {
  std::vector<int> hidden{64, 64};
  HiddenActivation activation = HiddenActivation::relu;
  double learning_rate = 1e-4;
};

/// Twin critics on (s, a) with Polyak-averaged targets. `kind` says whether
/// they estimate Q or the residual C.
struct CriticPair {
  Mlp c1, c2, c1_targ, c2_targ;
  AdamState opt1, opt2;
  CriticKind kind = CriticKind::C;
  Normalizer input_norm;
  int state_dim = 0;
  int action_dim = 0;

  CriticPair() = default;

  CriticPair(int sd, int ad, CriticKind k, CriticConfig cfg, std::uint64_t seed,
             std::optional<Normalizer> normalizer = std::nullopt, bool zero_init = false)
      : kind(k), input_norm(normalizer ? *normalizer : Normalizer::identity(sd + ad)), state_dim(sd), action_dim(ad) {
    require(input_norm.dim() == sd + ad, "CriticPair: normalizer dimension mismatch");
    const auto sizes = layer_sizes(sd + ad, cfg.hidden, 1);
    c1 = Mlp(sizes, cfg.activation);
    c2 = Mlp(sizes, cfg.activation);
    if (!zero_init) {
      Rng rng(seed);
      c1.init_glorot(rng);
      c2.init_glorot(rng);
    }
    c1_targ = c1;
    c2_targ = c2;
    opt1 = AdamState(c1, AdamConfig{cfg.learning_rate});
    opt2 = AdamState(c2, AdamConfig{cfg.learning_rate});
  }

  Matrix input(const Matrix& states, const Matrix& actions) const {
    require(states.rows() == state_dim && actions.rows() == action_dim && states.cols() == actions.cols(),
            "CriticPair: batch shape mismatch");
    Matrix x(state_dim + action_dim, states.cols());
    x.topRows(state_dim) = states;
    x.bottomRows(action_dim) = actions;
    return input_norm.apply(x);
  }

  /// Elementwise min of the two target critics.
  Eigen::RowVectorXd min_target(const Matrix& states, const Matrix& actions) const {
    const Matrix x = input(states, actions);
    return c1_targ.forward(x).row(0).cwiseMin(c2_targ.forward(x).row(0));
  }

  /// min(c1, c2) and its gradient w.r.t. the raw actions (through the smaller critic).
  Eigen::RowVectorXd min_live_with_action_grad(const Matrix& states, const Matrix& actions, Matrix& action_grad) const {
    const Matrix x = input(states, actions);
    ForwardCache k1, k2;
    const Eigen::RowVectorXd v1 = c1.forward(x, k1).row(0);
    const Eigen::RowVectorXd v2 = c2.forward(x, k2).row(0);
    Matrix m1(1, x.cols()), m2(1, x.cols());
    Eigen::RowVectorXd v(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const bool first = v1(j) <= v2(j);
      m1(0, j) = first ? 1.0 : 0.0;
      m2(0, j) = first ? 0.0 : 1.0;
      v(j) = first ? v1(j) : v2(j);
    }
    const Matrix g = c1.backward(k1, m1).input_grad + c2.backward(k2, m2).input_grad;
    action_grad = input_norm.pullback(g).bottomRows(action_dim);
    return v;
  }
};

/// target <- zeta * target + (1 - zeta) * live for both critics.
inline void polyak_update(CriticPair& critics, double zeta) {
  require(zeta >= 0.0 && zeta <= 1.0, "polyak_update: zeta must lie in [0, 1]");
  polyak_average(critics.c1_targ, critics.c1, zeta);
  polyak_average(critics.c2_targ, critics.c2, zeta);
}

}  // namespace arc
