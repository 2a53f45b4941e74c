#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "arc/core/adam.hpp"
#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"
#include "arc/core/normalizer.hpp"
#include "arc/core/rng.hpp"
#include "arc/env/continuous.hpp"

namespace arc {

/// Fits Q_hat and C_hat to rollout values of a constant-action driver on the
/// 1D car and compares value and action-gradient errors of Q_hat vs r + C_hat.
struct GradAccuracyConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<int> epochs{0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  int n_train = 2048;
  int n_test = 1024;
  double s_lo = 0.0, s_hi = 1.0;
  double a_lo = 0.0, a_hi = 0.3;
  int horizon = 50;
  double gamma = 0.99;
  double agent_action = 0.15;
  std::vector<int> hidden{64, 64};
  double learning_rate = 1e-3;
  long batch = 256;
  double fd_step = 1e-6;
};

inline void validate(const GradAccuracyConfig& c) {
  require(c.seeds.size() >= 3, "grad accuracy: need at least 3 seeds");
  require(!c.epochs.empty() && std::is_sorted(c.epochs.begin(), c.epochs.end()) && c.epochs.front() >= 0,
          "grad accuracy: epoch grid must be sorted and non-negative");
  require(c.n_train >= 1 && c.n_test >= 1 && c.batch >= 1, "grad accuracy: sizes must be positive");
  require(c.horizon >= 1 && c.gamma >= 0.0 && c.gamma <= 1.0, "grad accuracy: bad horizon or gamma");
  require(c.s_hi > c.s_lo && c.a_hi > c.a_lo, "grad accuracy: empty sampling box");
  require(c.learning_rate > 0.0 && c.fd_step > 0.0, "grad accuracy: lr and fd step must be positive");
}

/// Discounted rollout return: a at s, then the constant action for horizon - 1 steps.
inline double car1d_true_q(double s, double a, const GradAccuracyConfig& c) {
  double q = car1d_reward(s, a);
  double x = s + Car1DEnv::kStepScale * a;
  double disc = 1.0;
  for (int t = 1; t < c.horizon; ++t) {
    disc *= c.gamma;
    q += disc * car1d_reward(x, c.agent_action);
    x += Car1DEnv::kStepScale * c.agent_action;
  }
  return q;
}

inline double car1d_true_q_grad(double s, double a, const GradAccuracyConfig& c) {
  return (car1d_true_q(s, a + c.fd_step, c) - car1d_true_q(s, a - c.fd_step, c)) / (2.0 * c.fd_step);
}

inline double car1d_reward_grad(double s, double a) { return -200.0 * (a - car1d_expert(s)); }

struct GradAccuracyRow {
  std::string estimator;  // "q" or "r_plus_c"
  std::uint64_t seed = 0;
  int epoch = 0;
  double value_mae = 0.0;
  double grad_mae = 0.0;
};

struct GradAccuracyResult {
  std::vector<GradAccuracyRow> rows;
  double value_range = 0.0;  // max - min true Q over all test sets
};

namespace grad_acc_detail {

struct Split {
  Matrix x;  // rows: s, a
  Eigen::RowVectorXd q, r;
};

inline Split sample(int n, Rng& rng, const GradAccuracyConfig& c) {
  Split d{Matrix(2, n), Eigen::RowVectorXd(n), Eigen::RowVectorXd(n)};
  for (int j = 0; j < n; ++j) {
    const double s = rng.uniform(c.s_lo, c.s_hi), a = rng.uniform(c.a_lo, c.a_hi);
    d.x(0, j) = s;
    d.x(1, j) = a;
    d.q(j) = car1d_true_q(s, a, c);
    d.r(j) = car1d_reward(s, a);
  }
  return d;
}

/// Value and d/da of the net at raw inputs.
inline void value_and_action_grad(const Mlp& net, const Normalizer& norm, const Matrix& x, Eigen::RowVectorXd& v,
                                  Eigen::RowVectorXd& g) {
  ForwardCache cache;
  v = net.forward(norm.apply(x), cache).row(0);
  const GradTape t = net.backward(cache, Matrix::Ones(1, x.cols()));
  g = norm.pullback(t.input_grad).row(1);
}

}  // namespace grad_acc_detail

inline GradAccuracyResult gradient_accuracy_experiment(const GradAccuracyConfig& c) {
  validate(c);
  using namespace grad_acc_detail;
  GradAccuracyResult out;
  double q_min = std::numeric_limits<double>::infinity(), q_max = -q_min;
  const Normalizer norm{(Vector(2) << (c.s_lo + c.s_hi) / 2, (c.a_lo + c.a_hi) / 2).finished(),
                        (Vector(2) << (c.s_hi - c.s_lo) / 2, (c.a_hi - c.a_lo) / 2).finished()};
  const auto sizes = layer_sizes(2, c.hidden, 1);

  for (std::uint64_t seed : c.seeds) {
    Rng data_rng(derive_seed(seed, Stream::data));
    const Split train = sample(c.n_train, data_rng, c);
    Rng test_rng(derive_seed(seed, Stream::data, 1));
    const Split test = sample(c.n_test, test_rng, c);
    q_min = std::min(q_min, test.q.minCoeff());
    q_max = std::max(q_max, test.q.maxCoeff());
    Eigen::RowVectorXd true_grad(c.n_test);
    for (int j = 0; j < c.n_test; ++j) true_grad(j) = car1d_true_q_grad(test.x(0, j), test.x(1, j), c);
    const Eigen::RowVectorXd train_c = train.q - train.r;

    // Same initialization and minibatch order for both nets; only targets differ.
    Mlp q_net(sizes, HiddenActivation::relu), c_net(sizes, HiddenActivation::relu);
    {
      Rng init(derive_seed(seed, Stream::critic_init));
      q_net.init_glorot(init);
    }
    c_net = q_net;
    AdamState q_opt(q_net, AdamConfig{c.learning_rate}), c_opt(c_net, AdamConfig{c.learning_rate});
    Rng shuffle(derive_seed(seed, Stream::buffer));
    const Matrix x_train = norm.apply(train.x);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(c.n_train));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    auto record = [&](int epoch) {
      Eigen::RowVectorXd v, g;
      value_and_action_grad(q_net, norm, test.x, v, g);
      out.rows.push_back({"q", seed, epoch, (v - test.q).cwiseAbs().mean(), (g - true_grad).cwiseAbs().mean()});
      value_and_action_grad(c_net, norm, test.x, v, g);
      Eigen::RowVectorXd r_grad(c.n_test);
      for (int j = 0; j < c.n_test; ++j) r_grad(j) = car1d_reward_grad(test.x(0, j), test.x(1, j));
      out.rows.push_back({"r_plus_c", seed, epoch, (test.r + v - test.q).cwiseAbs().mean(),
                          (r_grad + g - true_grad).cwiseAbs().mean()});
    };

    std::size_t next = 0;
    for (int epoch = 0; next < c.epochs.size(); ++epoch) {
      if (epoch == c.epochs[next]) {
        record(epoch);
        ++next;
        if (next == c.epochs.size()) break;
      }
      std::shuffle(order.begin(), order.end(), shuffle.engine());
      for (Eigen::Index start = 0; start < c.n_train; start += c.batch) {
        const Eigen::Index m = std::min<Eigen::Index>(c.batch, c.n_train - start);
        Matrix xb(2, m);
        Eigen::RowVectorXd yq(m), yc(m);
        for (Eigen::Index j = 0; j < m; ++j) {
          const Eigen::Index k = order[static_cast<std::size_t>(start + j)];
          xb.col(j) = x_train.col(k);
          yq(j) = train.q(k);
          yc(j) = train_c(k);
        }
        for (int which = 0; which < 2; ++which) {
          Mlp& net = which == 0 ? q_net : c_net;
          AdamState& opt = which == 0 ? q_opt : c_opt;
          const Eigen::RowVectorXd& y = which == 0 ? yq : yc;
          ForwardCache cache;
          const Eigen::RowVectorXd err = net.forward(xb, cache).row(0) - y;
          adam_step(net, net.backward(cache, (2.0 / static_cast<double>(m)) * err), opt);
        }
      }
    }
  }
  out.value_range = q_max - q_min;
  return out;
}

struct GradAccuracySummaryRow {
  int epoch = 0;
  double q_value_mae = 0.0, q_grad_mae = 0.0;
  double rc_value_mae = 0.0, rc_grad_mae = 0.0;
};

/// Seed-averaged errors per checkpoint epoch.
inline std::vector<GradAccuracySummaryRow> summarize(const GradAccuracyResult& res) {
  std::map<int, GradAccuracySummaryRow> acc;
  std::map<int, int> nq, nc;
  for (const auto& r : res.rows) {
    auto& s = acc[r.epoch];
    s.epoch = r.epoch;
    if (r.estimator == "q") {
      s.q_value_mae += r.value_mae, s.q_grad_mae += r.grad_mae, ++nq[r.epoch];
    } else {
      s.rc_value_mae += r.value_mae, s.rc_grad_mae += r.grad_mae, ++nc[r.epoch];
    }
  }
  std::vector<GradAccuracySummaryRow> out;
  for (auto& [e, s] : acc) {
    s.q_value_mae /= nq[e], s.q_grad_mae /= nq[e];
    s.rc_value_mae /= nc[e], s.rc_grad_mae /= nc[e];
    out.push_back(s);
  }
  return out;
}

inline void write_grad_accuracy_csv(std::ostream& os, const GradAccuracyResult& res) {
  os << "estimator,seed,epoch,value_mae,grad_mae\n" << std::setprecision(17);
  for (const auto& r : res.rows)
    os << r.estimator << ',' << r.seed << ',' << r.epoch << ',' << r.value_mae << ',' << r.grad_mae << '\n';
}

inline std::string grad_accuracy_csv(const GradAccuracyResult& res) {
  std::ostringstream os;
  write_grad_accuracy_csv(os, res);
  return os.str();
}

}  // namespace arc
