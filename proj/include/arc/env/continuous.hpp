#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/core/rng.hpp"

namespace arc {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  std::vector<double> next_state;
  double reward_env = 0.0;
  bool done = false;  // true only when next_state is a true terminal state
};

struct Trajectory {
  std::vector<Transition> transitions;
  double episode_return = 0.0;

  void push(Transition t) {
    episode_return += t.reward_env;
    transitions.push_back(std::move(t));
  }
};

enum class EnvKind { car1d, reach, push };

inline std::string_view to_string(EnvKind k) {
  switch (k) {
    case EnvKind::car1d: return "car1d";
    case EnvKind::reach: return "reach";
    case EnvKind::push: return "push";
  }
  return "?";
}

inline EnvKind parse_env_kind(std::string_view name) {
  if (name == "car1d") return EnvKind::car1d;
  if (name == "reach" || name == "planar_reach") return EnvKind::reach;
  if (name == "push" || name == "planar_push") return EnvKind::push;
  throw ContractViolation("unknown env kind '" + std::string(name) + "'");
}

/// Fixed-horizon continuous-control environment. Actions are clamped per
/// dimension to [-action_bound, action_bound] before the dynamics see them.
class ContinuousEnv {
 public:
  virtual ~ContinuousEnv() = default;

  virtual EnvKind kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int horizon() const = 0;
  virtual double action_bound() const = 0;
  virtual std::unique_ptr<ContinuousEnv> clone() const = 0;

  /// Starts a new episode and returns the first observation.
  std::vector<double> reset(Rng& rng) {
    t_ = 0;
    return do_reset(rng);
  }

  Transition step(std::span<const double> action) {
    require(static_cast<int>(action.size()) == action_dim(), "ContinuousEnv::step: action length mismatch");
    require(t_ < horizon(), "ContinuousEnv::step: episode already finished");
    std::vector<double> clamped(action.begin(), action.end());
    const double bound = action_bound();
    for (double& a : clamped) a = std::clamp(a, -bound, bound);
    Transition tr;
    tr.state = observe();
    tr.action = clamped;
    tr.reward_env = apply(clamped);
    tr.next_state = observe();
    tr.done = false;
    ++t_;
    return tr;
  }

  int t() const { return t_; }
  bool episode_over() const { return t_ >= horizon(); }
  virtual std::vector<double> observe() const = 0;

 protected:
  virtual std::vector<double> do_reset(Rng& rng) = 0;
  /// Applies the already-clamped action and returns the reward.
  virtual double apply(const std::vector<double>& action) = 0;

 private:
  int t_ = 0;
};

// ---------------------------------------------------------------- car 1D

inline double car1d_expert(double obs) {
  constexpr double gain = 0.1;
  constexpr double goal = 1.0;
  return gain * (goal - obs) + 0.1;
}

inline double car1d_reward(double obs, double a) {
  const double d = a - car1d_expert(obs);
  return 0.0 - 100.0 * d * d;  // +0 rather than -0 on the expert curve
}

/// Stateful extension of the 1D driving toy: x <- x + 0.1 a, start at 0,
/// reward car1d_reward(x, a) on the pre-step position. Actions live in
/// [-0.3, 0.3]; the expert's stay within [0.1, 0.2].
class Car1DEnv final : public ContinuousEnv {
 public:
  static constexpr double kStepScale = 0.1;
  static constexpr double kDefaultActionBound = 0.3;

  explicit Car1DEnv(int horizon = 50, double action_bound = kDefaultActionBound)
      : horizon_(horizon), bound_(action_bound) {}

  EnvKind kind() const override { return EnvKind::car1d; }
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  int horizon() const override { return horizon_; }
  double action_bound() const override { return bound_; }
  std::unique_ptr<ContinuousEnv> clone() const override { return std::make_unique<Car1DEnv>(*this); }
  std::vector<double> observe() const override { return {x_}; }
  double position() const { return x_; }

 protected:
  std::vector<double> do_reset(Rng&) override {
    x_ = 0.0;
    return observe();
  }
  double apply(const std::vector<double>& action) override {
    const double r = car1d_reward(x_, action[0]);
    x_ += kStepScale * action[0];
    return r;
  }

 private:
  int horizon_;
  double bound_;
  double x_ = 0.0;
};

// ---------------------------------------------------------------- planar reach / push

inline constexpr double kPlanarMaxStep = 0.033;  // metres per axis per step

/// Observation: goal minus end-effector (metres). Reward: -distance after the move.
class PlanarReachEnv final : public ContinuousEnv {
 public:
  static constexpr double kGoalX = 0.15;
  static constexpr double kGoalY = -0.15;

  explicit PlanarReachEnv(double noise_std = 1e-4, int horizon = 20) : noise_std_(noise_std), horizon_(horizon) {}

  EnvKind kind() const override { return EnvKind::reach; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  int horizon() const override { return horizon_; }
  double action_bound() const override { return kPlanarMaxStep; }
  std::unique_ptr<ContinuousEnv> clone() const override { return std::make_unique<PlanarReachEnv>(*this); }
  std::vector<double> observe() const override { return {offset_[0], offset_[1]}; }

  /// Places the environment at an arbitrary offset (tests, analysis).
  void set_offset(double dx, double dy) { offset_[0] = dx, offset_[1] = dy; }

 protected:
  std::vector<double> do_reset(Rng& rng) override {
    offset_[0] = kGoalX + (noise_std_ > 0.0 ? rng.normal(0.0, noise_std_) : 0.0);
    offset_[1] = kGoalY + (noise_std_ > 0.0 ? rng.normal(0.0, noise_std_) : 0.0);
    return observe();
  }
  double apply(const std::vector<double>& action) override {
    offset_[0] -= action[0];
    offset_[1] -= action[1];
    return -std::hypot(offset_[0], offset_[1]);
  }

 private:
  double noise_std_;
  int horizon_;
  double offset_[2] = {0.0, 0.0};
};

/// Planar pushing with rigid discs. Observation: (block - effector, goal - block).
/// Reward: -|goal - block| after the move.
class PlanarPushEnv final : public ContinuousEnv {
 public:
  static constexpr double kEffectorRadius = 0.02;
  static constexpr double kBlockRadius = 0.025;
  static constexpr double kContactDistance = kEffectorRadius + kBlockRadius;
  static constexpr double kBlockY = -0.10;
  static constexpr double kGoalY = -0.30;
  static constexpr int kSubsteps = 10;

  explicit PlanarPushEnv(double noise_std = 1e-4, int horizon = 30) : noise_std_(noise_std), horizon_(horizon) {}

  EnvKind kind() const override { return EnvKind::push; }
  int state_dim() const override { return 4; }
  int action_dim() const override { return 2; }
  int horizon() const override { return horizon_; }
  double action_bound() const override { return kPlanarMaxStep; }
  std::unique_ptr<ContinuousEnv> clone() const override { return std::make_unique<PlanarPushEnv>(*this); }
  std::vector<double> observe() const override {
    return {block_[0] - eff_[0], block_[1] - eff_[1], goal_[0] - block_[0], goal_[1] - block_[1]};
  }

  /// Absolute positions, effector first. For tests and analysis.
  void set_positions(double ex, double ey, double bx, double by, double gx, double gy) {
    eff_[0] = ex, eff_[1] = ey, block_[0] = bx, block_[1] = by, goal_[0] = gx, goal_[1] = gy;
  }
  std::array<double, 2> block() const { return {block_[0], block_[1]}; }
  std::array<double, 2> effector() const { return {eff_[0], eff_[1]}; }

 protected:
  std::vector<double> do_reset(Rng& rng) override {
    eff_[0] = eff_[1] = 0.0;
    auto noise = [&] { return noise_std_ > 0.0 ? rng.normal(0.0, noise_std_) : 0.0; };
    block_[0] = 0.0 + noise();
    block_[1] = kBlockY + noise();
    goal_[0] = 0.0 + noise();
    goal_[1] = kGoalY + noise();
    return observe();
  }

  double apply(const std::vector<double>& action) override {
    // Sub-stepping keeps a full-size move from tunnelling through the block.
    const double sx = action[0] / kSubsteps, sy = action[1] / kSubsteps;
    for (int k = 0; k < kSubsteps; ++k) {
      eff_[0] += sx;
      eff_[1] += sy;
      const double dx = block_[0] - eff_[0], dy = block_[1] - eff_[1];
      const double dist = std::hypot(dx, dy);
      if (dist >= kContactDistance) continue;
      double ux, uy;
      if (dist > 1e-12) {
        ux = dx / dist, uy = dy / dist;
      } else {
        const double n = std::hypot(sx, sy);
        if (n == 0.0) continue;
        ux = sx / n, uy = sy / n;
      }
      const double overlap = kContactDistance - dist;
      block_[0] += overlap * ux;
      block_[1] += overlap * uy;
    }
    return -std::hypot(goal_[0] - block_[0], goal_[1] - block_[1]);
  }

 private:
  double noise_std_;
  int horizon_;
  double eff_[2] = {0.0, 0.0};
  double block_[2] = {0.0, 0.0};
  double goal_[2] = {0.0, 0.0};
};

inline std::unique_ptr<ContinuousEnv> make_env(EnvKind kind, double noise_std = 1e-4) {
  switch (kind) {
    case EnvKind::car1d: return std::make_unique<Car1DEnv>();
    case EnvKind::reach: return std::make_unique<PlanarReachEnv>(noise_std);
    case EnvKind::push: return std::make_unique<PlanarPushEnv>(noise_std);
  }
  throw ContractViolation("make_env: unknown env kind");
}

}  // namespace arc
