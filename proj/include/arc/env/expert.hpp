#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "arc/core/errors.hpp"
#include "arc/core/rng.hpp"
#include "arc/env/continuous.hpp"

namespace arc {

/// Proportional gain of the scripted planar controllers. Any gain above 1
/// overshoots a pure displacement plant, so the expert halves the remaining
/// error each step once it leaves saturation.
inline constexpr double kExpertGain = 0.5;
/// Waypoint distance behind the block centre, along the block->goal line.
inline constexpr double kPushWaypointOffset = 0.03;
/// The push controller counts as "behind the block" inside this radius of the waypoint.
inline constexpr double kPushWaypointTolerance = 0.02;

namespace expert_detail {

inline double clamp_step(double v) { return std::clamp(v, -kPlanarMaxStep, kPlanarMaxStep); }

inline std::vector<double> reach_action(std::span<const double> offset) {
  return {clamp_step(kExpertGain * offset[0]), clamp_step(kExpertGain * offset[1])};
}

// Frame: effector at the origin, block at p, goal at p + g.
inline std::vector<double> push_action(std::span<const double> state) {
  const double px = state[0], py = state[1], gx = state[2], gy = state[3];
  const double gn = std::hypot(gx, gy);
  if (gn < 1e-9) return {0.0, 0.0};
  const double ux = gx / gn, uy = gy / gn;
  const double wx = px - kPushWaypointOffset * ux, wy = py - kPushWaypointOffset * uy;

  if (std::hypot(wx, wy) > kPushWaypointTolerance) {
    // Effector position relative to the block, split along / across the push line.
    const double ex = -px, ey = -py;
    const double along = ex * ux + ey * uy;
    const double lx = ex - along * ux, ly = ey - along * uy;
    const double lateral = std::hypot(lx, ly);
    const double clearance = PlanarPushEnv::kContactDistance + 0.005;
    if (along > -kPushWaypointOffset && lateral < clearance) {
      // In front of or beside the block: side-step away from the push line first.
      double sx = lx, sy = ly;
      if (lateral < 1e-9) sx = -uy, sy = ux;
      const double sn = std::hypot(sx, sy);
      return {clamp_step(kPlanarMaxStep * sx / sn), clamp_step(kPlanarMaxStep * sy / sn)};
    }
    return {clamp_step(wx), clamp_step(wy)};
  }
  // Behind the block: push toward the goal, steering back onto the push line.
  const double along_w = wx * ux + wy * uy;
  const double perp_x = wx - along_w * ux, perp_y = wy - along_w * uy;
  return {clamp_step(kExpertGain * gx + perp_x), clamp_step(kExpertGain * gy + perp_y)};
}

}  // namespace expert_detail

/// Hand-coded controller for the given environment kind.
inline std::vector<double> scripted_expert(EnvKind kind, std::span<const double> state) {
  switch (kind) {
    case EnvKind::reach:
      require(state.size() == 2, "scripted_expert: reach state must be 2D");
      return expert_detail::reach_action(state);
    case EnvKind::push:
      require(state.size() == 4, "scripted_expert: push state must be 4D");
      return expert_detail::push_action(state);
    case EnvKind::car1d:
      require(state.size() == 1, "scripted_expert: car1d state must be 1D");
      return {car1d_expert(state[0])};
  }
  throw ContractViolation("scripted_expert: unknown env kind");
}

/// Rolls out `act(state)` for one full episode.
template <class Policy>
Trajectory rollout(ContinuousEnv& env, Rng& rng, Policy&& act) {
  Trajectory traj;
  std::vector<double> s = env.reset(rng);
  while (!env.episode_over()) {
    const std::vector<double> a = act(std::span<const double>(s));
    Transition tr = env.step(a);
    s = tr.next_state;
    traj.push(std::move(tr));
  }
  return traj;
}

/// Scripted-expert demonstrations. Episode i uses its own RNG stream so the
/// dataset is a pure function of (kind, n, seed).
inline std::vector<Trajectory> generate_expert_dataset(EnvKind kind, int n_trajectories, std::uint64_t seed,
                                                       double noise_std = 1e-4) {
  require(n_trajectories >= 1, "generate_expert_dataset: need at least one trajectory");
  auto env = make_env(kind, noise_std);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n_trajectories));
  for (int i = 0; i < n_trajectories; ++i) {
    Rng rng(derive_seed(seed, Stream::expert, static_cast<std::uint64_t>(i)));
    out.push_back(rollout(*env, rng, [kind](std::span<const double> s) { return scripted_expert(kind, s); }));
  }
  return out;
}

}  // namespace arc
