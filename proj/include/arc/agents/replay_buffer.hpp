#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"
#include "arc/core/rng.hpp"
#include "arc/env/continuous.hpp"

namespace arc {

/// Columns of (s, a, s', d) drawn from a buffer.
struct TransitionBatch {
  Matrix states;
  Matrix actions;
  Matrix next_states;
  Eigen::RowVectorXd dones;

  Eigen::Index size() const { return states.cols(); }
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten once full.
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int state_dim, int action_dim, std::uint64_t seed)
      : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim), rng_(seed) {
    require(capacity > 0, "ReplayBuffer: capacity must be positive");
    require(state_dim > 0 && action_dim > 0, "ReplayBuffer: dimensions must be positive");
    states_.resize(state_dim, capacity);
    actions_.resize(action_dim, capacity);
    next_states_.resize(state_dim, capacity);
    dones_.resize(capacity);
  }

  void add(std::span<const double> s, std::span<const double> a, std::span<const double> s2, bool done) {
    require(static_cast<int>(s.size()) == state_dim_ && static_cast<int>(s2.size()) == state_dim_ &&
                static_cast<int>(a.size()) == action_dim_,
            "ReplayBuffer::add: dimension mismatch");
    for (int i = 0; i < state_dim_; ++i) {
      states_(i, next_) = s[static_cast<std::size_t>(i)];
      next_states_(i, next_) = s2[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < action_dim_; ++i) actions_(i, next_) = a[static_cast<std::size_t>(i)];
    dones_(next_) = done ? 1.0 : 0.0;
    next_ = (next_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }

  void add(const Transition& t) { add(t.state, t.action, t.next_state, t.done); }

  /// Uniform sampling with replacement.
  TransitionBatch sample(long batch) {
    require(size_ > 0, "ReplayBuffer::sample: buffer is empty");
    require(batch > 0, "ReplayBuffer::sample: batch must be positive");
    TransitionBatch b{Matrix(state_dim_, batch), Matrix(action_dim_, batch), Matrix(state_dim_, batch),
                      Eigen::RowVectorXd(batch)};
    for (long j = 0; j < batch; ++j) {
      const auto k = static_cast<Eigen::Index>(rng_.index(static_cast<std::size_t>(size_)));
      b.states.col(j) = states_.col(k);
      b.actions.col(j) = actions_.col(k);
      b.next_states.col(j) = next_states_.col(k);
      b.dones(j) = dones_(k);
    }
    return b;
  }

  /// Index drawn the same way `sample` draws each column.
  long sample_index() { return static_cast<long>(rng_.index(static_cast<std::size_t>(size_))); }

  long size() const { return size_; }
  long capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

 private:
  long capacity_;
  int state_dim_;
  int action_dim_;
  Rng rng_;
  Matrix states_, actions_, next_states_;
  Eigen::VectorXd dones_;
  long next_ = 0;
  long size_ = 0;
};

}  // namespace arc
