#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"

namespace arc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> first_moment_w, second_moment_w;
  std::vector<Vector> first_moment_b, second_moment_b;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const Mlp& net, AdamConfig cfg)
      : learning_rate(cfg.learning_rate), beta1(cfg.beta1), beta2(cfg.beta2), epsilon(cfg.epsilon) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      const auto& w = net.weights()[l];
      first_moment_w.emplace_back(Matrix::Zero(w.rows(), w.cols()));
      second_moment_w.emplace_back(Matrix::Zero(w.rows(), w.cols()));
      first_moment_b.emplace_back(Vector::Zero(net.biases()[l].size()));
      second_moment_b.emplace_back(Vector::Zero(net.biases()[l].size()));
    }
  }
};

/// One Adam descent step: params -= lr * mhat / (sqrt(vhat) + eps).
/// Non-finite gradients are rejected before any state is touched.
inline void adam_step(Mlp& net, const GradTape& grads, AdamState& state) {
  require(grads.weight_grads.size() == net.num_layers() && state.first_moment_w.size() == net.num_layers(),
          "adam_step: layer count mismatch");
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    require(grads.weight_grads[l].rows() == net.weights()[l].rows() &&
                grads.weight_grads[l].cols() == net.weights()[l].cols() &&
                grads.bias_grads[l].size() == net.biases()[l].size(),
            "adam_step: gradient shape mismatch at layer " + std::to_string(l));
    if (!grads.weight_grads[l].allFinite() || !grads.bias_grads[l].allFinite())
      throw NumericalError("adam_step: non-finite gradient at layer " + std::to_string(l));
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, lr = state.learning_rate, eps = state.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    update(net.weights()[l], state.first_moment_w[l], state.second_moment_w[l], grads.weight_grads[l]);
    update(net.biases()[l], state.first_moment_b[l], state.second_moment_b[l], grads.bias_grads[l]);
  }
  if (!net.all_finite()) throw NumericalError("adam_step: parameters became non-finite");
}

}  // namespace arc
