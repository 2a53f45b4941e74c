#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "arc/core/errors.hpp"

namespace arc {

/// f_hat(x) = f(x) + eps * sin(b (x - x0)) with b = 2D / eps. Stays within eps
/// of f everywhere while its slope at x0 is off by exactly 2D.
class AdversarialApprox {
 public:
  using Fn = std::function<double(double)>;

  AdversarialApprox(Fn base, Fn base_derivative, double epsilon, double big_d, double x0)
      : base_(std::move(base)), base_d_(std::move(base_derivative)), eps_(epsilon), d_(big_d), x0_(x0) {
    require(epsilon > 0.0 && std::isfinite(epsilon), "AdversarialApprox: epsilon must be positive");
    require(big_d > 0.0 && std::isfinite(big_d), "AdversarialApprox: D must be positive");
    require(static_cast<bool>(base_) && static_cast<bool>(base_d_), "AdversarialApprox: base function and derivative required");
    b_ = 2.0 * big_d / epsilon;
  }

  double epsilon() const { return eps_; }
  double big_d() const { return d_; }
  double x0() const { return x0_; }
  double b() const { return b_; }

  double base(double x) const { return base_(x); }
  double base_derivative(double x) const { return base_d_(x); }
  double perturbation(double x) const { return eps_ * std::sin(b_ * (x - x0_)); }
  double perturbation_derivative(double x) const { return eps_ * b_ * std::cos(b_ * (x - x0_)); }

  double operator()(double x) const { return base_(x) + perturbation(x); }
  double derivative(double x) const { return base_d_(x) + perturbation_derivative(x); }

 private:
  Fn base_, base_d_;
  double eps_, d_, x0_, b_ = 0.0;
};

inline AdversarialApprox build_adversarial_approx(AdversarialApprox::Fn f, AdversarialApprox::Fn f_prime, double epsilon,
                                                  double big_d, double x0) {
  return AdversarialApprox(std::move(f), std::move(f_prime), epsilon, big_d, x0);
}

struct ApproxCheck {
  double sup_value_error = 0.0;  // max |f_hat - f| over the grid
  double slope_error_at_x0 = 0.0;  // |f_hat'(x0) - f'(x0)|
};

/// Dense uniform grid over [lo, hi] with n points.
inline ApproxCheck grid_check(const AdversarialApprox& g, double lo, double hi, int n) {
  require(n >= 2 && hi > lo, "grid_check: need n >= 2 and hi > lo");
  ApproxCheck c;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    c.sup_value_error = std::max(c.sup_value_error, std::abs(g(x) - g.base(x)));
  }
  c.slope_error_at_x0 = std::abs(g.derivative(g.x0()) - g.base_derivative(g.x0()));
  return c;
}

}  // namespace arc
