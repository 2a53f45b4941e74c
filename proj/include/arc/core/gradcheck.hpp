#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"

namespace arc {

inline constexpr double kDefaultFiniteDiffStep = 1e-5;

/// Central-difference estimate of d(output)/d(input) for a scalar-output network.
inline Vector finite_diff_input_grad(const Mlp& net, std::span<const double> input,
                                     double h = kDefaultFiniteDiffStep) {
  require(h > 0.0, "finite_diff_input_grad: h must be positive");
  require(net.output_dim() == 1, "finite_diff_input_grad: network output must be scalar");
  require(static_cast<int>(input.size()) == net.input_dim(), "finite_diff_input_grad: input length mismatch");
  std::vector<double> x(input.begin(), input.end());
  Vector grad(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = net.forward(x)(0);
    x[i] = saved - h;
    const double down = net.forward(x)(0);
    x[i] = saved;
    grad(static_cast<Eigen::Index>(i)) = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Central-difference gradient of an arbitrary scalar functional of a vector.
inline std::vector<double> finite_diff(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x0, double h = kDefaultFiniteDiffStep) {
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Central differences of `objective(net)` w.r.t. every parameter, in the
/// flat order of Mlp::parameter.
inline std::vector<double> finite_diff_param_grad(Mlp& net, const std::function<double(const Mlp&)>& objective,
                                                  double h = kDefaultFiniteDiffStep) {
  std::vector<double> g(net.parameter_count());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& p = net.parameter(i);
    const double saved = p;
    p = saved + h;
    const double up = objective(net);
    p = saved - h;
    const double down = objective(net);
    p = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Flattens a tape's parameter gradients in Mlp::parameter order.
inline std::vector<double> flatten_parameter_grads(const GradTape& tape) {
  std::vector<double> out;
  for (std::size_t l = 0; l < tape.weight_grads.size(); ++l) {
    out.insert(out.end(), tape.weight_grads[l].data(), tape.weight_grads[l].data() + tape.weight_grads[l].size());
    out.insert(out.end(), tape.bias_grads[l].data(), tape.bias_grads[l].data() + tape.bias_grads[l].size());
  }
  return out;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries whose
/// true derivative is ~0 from dividing round-off by round-off.
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  require(a.size() == b.size(), "max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-6) {
  return max_relative_error(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                            std::span<const double>(b.data(), static_cast<std::size_t>(b.size())), floor);
}

}  // namespace arc
