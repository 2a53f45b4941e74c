#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>

#include "arc/adversary/discriminator.hpp"
#include "arc/env/continuous.hpp"

namespace arc {

/// Differentiable reward r(s, a) on batches of columns.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual Eigen::RowVectorXd rewards(const Matrix& states, const Matrix& actions) const = 0;
  /// Rewards plus d r / d a, one column per sample.
  virtual Eigen::RowVectorXd rewards_and_action_grad(const Matrix& states, const Matrix& actions,
                                                     Matrix& action_grad) const = 0;
};

class DiscriminatorReward final : public RewardModel {
 public:
  DiscriminatorReward(const Discriminator& disc, RewardKind kind) : disc_(&disc), kind_(kind) {}

  Eigen::RowVectorXd rewards(const Matrix& s, const Matrix& a) const override {
    return arc::rewards(*disc_, s, a, kind_);
  }
  Eigen::RowVectorXd rewards_and_action_grad(const Matrix& s, const Matrix& a, Matrix& g) const override {
    return arc::rewards_and_action_grad(*disc_, s, a, kind_, g);
  }

 private:
  const Discriminator* disc_;
  RewardKind kind_;
};

class ZeroReward final : public RewardModel {
 public:
  Eigen::RowVectorXd rewards(const Matrix&, const Matrix& a) const override {
    return Eigen::RowVectorXd::Zero(a.cols());
  }
  Eigen::RowVectorXd rewards_and_action_grad(const Matrix&, const Matrix& a, Matrix& g) const override {
    g = Matrix::Zero(a.rows(), a.cols());
    return Eigen::RowVectorXd::Zero(a.cols());
  }
};

/// True Car1D reward -100 (a - expert(x))^2.
class Car1DReward final : public RewardModel {
 public:
  Eigen::RowVectorXd rewards(const Matrix& s, const Matrix& a) const override {
    Eigen::RowVectorXd r(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) r(j) = car1d_reward(s(0, j), a(0, j));
    return r;
  }
  Eigen::RowVectorXd rewards_and_action_grad(const Matrix& s, const Matrix& a, Matrix& g) const override {
    g.resize(1, a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) g(0, j) = -200.0 * (a(0, j) - car1d_expert(s(0, j)));
    return rewards(s, a);
  }
};

/// True planar-reach reward: -|offset - a| for an action inside the step bound.
class ReachReward final : public RewardModel {
 public:
  Eigen::RowVectorXd rewards(const Matrix& s, const Matrix& a) const override {
    return -(s - clamped(a)).colwise().norm();
  }
  Eigen::RowVectorXd rewards_and_action_grad(const Matrix& s, const Matrix& a, Matrix& g) const override {
    const Matrix d = s - clamped(a);
    const Eigen::RowVectorXd n = d.colwise().norm();
    g = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (n(j) == 0.0) continue;
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (std::abs(a(i, j)) < kPlanarMaxStep) g(i, j) = d(i, j) / n(j);
    }
    return -n;
  }

 private:
  static Matrix clamped(const Matrix& a) { return a.cwiseMax(-kPlanarMaxStep).cwiseMin(kPlanarMaxStep); }
};

}  // namespace arc
