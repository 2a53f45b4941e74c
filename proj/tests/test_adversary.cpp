#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "arc/adversary/discriminator.hpp"
#include "arc/adversary/reward_model.hpp"
#include "arc/core/gradcheck.hpp"

using namespace arc;

namespace {

DiscriminatorConfig small_config(double lambda = 0.0, double lr = 3e-4) {
  DiscriminatorConfig c;
  c.hidden = {16, 16};
  c.gp_lambda = lambda;
  c.learning_rate = lr;
  return c;
}

Discriminator zero_disc(int sd = 2, int ad = 2) { return Discriminator(sd, ad, small_config(), 1, std::nullopt, true); }

SABatch gaussian_batch(Rng& rng, int n, double mean_s, double mean_a) {
  SABatch b{Matrix(2, n), Matrix(2, n)};
  for (int j = 0; j < n; ++j) {
    b.states(0, j) = rng.normal(mean_s, 1.0);
    b.states(1, j) = rng.normal(mean_s, 1.0);
    b.actions(0, j) = rng.normal(mean_a, 1.0);
    b.actions(1, j) = rng.normal(mean_a, 1.0);
  }
  return b;
}

SABatch point_batch(int n, double v) {
  return SABatch{Matrix::Constant(2, n, v), Matrix::Constant(2, n, v)};
}

// log(1 / (1 + e^-x)) evaluated the obvious way.
double naive_log_sigmoid(double x) { return std::log(1.0 / (1.0 + std::exp(-x))); }

}  // namespace

TEST(Reward, HalfProbabilityValues) {
  const Discriminator d = zero_disc();
  const std::vector<double> s{0.3, -0.2}, a{0.1, 0.4};
  EXPECT_NEAR(reward(d, s, a, RewardKind::gail), -0.6931, 1e-4);
  EXPECT_EQ(reward(d, s, a, RewardKind::fmax_rkl), 0.0);
}

TEST(Reward, LogitThreeGivesThree) {
  Discriminator d = zero_disc();
  d.net().biases().back()(0) = 3.0;
  const std::vector<double> s{0.0, 0.0}, a{0.0, 0.0};
  EXPECT_EQ(reward(d, s, a, RewardKind::fmax_rkl), 3.0);
  EXPECT_NEAR(reward(d, s, a, RewardKind::gail), naive_log_sigmoid(3.0), 1e-14);
}

TEST(Reward, ClipFloorGail) {
  Discriminator d = zero_disc();
  d.net().biases().back()(0) = -50.0;
  const std::vector<double> s{0.0, 0.0}, a{0.0, 0.0};
  EXPECT_EQ(d.logit(s, a), -10.0);
  EXPECT_NEAR(reward(d, s, a, RewardKind::gail), -10.0000454, 1e-7);
  EXPECT_NEAR(reward(d, s, a, RewardKind::gail), naive_log_sigmoid(-10.0), 1e-12);
}

TEST(Reward, FmaxIsLogitAndGailNegative) {
  Discriminator d(2, 2, small_config(), 7);
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const double spread = k < 100 ? 1.0 : 100.0;
    std::vector<double> s{rng.normal(0, spread), rng.normal(0, spread)}, a{rng.normal(0, spread), rng.normal(0, spread)};
    const double logit = d.logit(s, a);
    const double r_f = reward(d, s, a, RewardKind::fmax_rkl);
    const double r_g = reward(d, s, a, RewardKind::gail);
    EXPECT_NEAR(r_f, logit, 1e-12);
    const double p = 1.0 / (1.0 + std::exp(-logit));
    EXPECT_NEAR(r_f, std::log(p) - std::log(1.0 - p), 1e-9);
    EXPECT_LT(r_g, 0.0);
    EXPECT_GE(r_f, -10.0);
    EXPECT_LE(r_f, 10.0);
  }
}

TEST(Reward, ScaleMultipliesReward) {
  DiscriminatorConfig c = small_config();
  c.reward_scale = 0.2;
  Discriminator d(2, 2, c, 7);
  Discriminator ref(2, 2, small_config(), 7);
  const std::vector<double> s{0.5, 0.1}, a{-0.3, 0.2};
  EXPECT_NEAR(reward(d, s, a, RewardKind::gail), 0.2 * reward(ref, s, a, RewardKind::gail), 1e-15);
}

TEST(RewardGrad, ZeroNetGivesZero) {
  const Discriminator d = zero_disc();
  const std::vector<double> s{0.3, -0.2}, a{0.1, 0.4};
  for (auto kind : {RewardKind::gail, RewardKind::fmax_rkl}) EXPECT_EQ(reward_grad_action(d, s, a, kind).norm(), 0.0);
}

TEST(RewardGrad, FmaxMatchesLogitInputGradient) {
  Discriminator d(2, 2, small_config(), 11);
  const std::vector<double> s{0.3, -0.2}, a{0.1, 0.4};
  std::vector<double> x{0.3, -0.2, 0.1, 0.4};
  const Vector input_grad = finite_diff_input_grad(d.net(), x);
  const Vector g = reward_grad_action(d, s, a, RewardKind::fmax_rkl);
  EXPECT_NEAR(g(0), input_grad(2), 1e-8);
  EXPECT_NEAR(g(1), input_grad(3), 1e-8);
}

TEST(RewardGrad, MatchesFiniteDifferencesWithNormalizer) {
  Normalizer norm{Vector(4), Vector(4)};
  norm.shift << 0.1, -0.2, 0.0, 0.05;
  norm.scale << 0.5, 2.0, 0.03, 0.01;
  Discriminator d(2, 2, small_config(), 13, norm);
  Rng rng(5);
  for (int probe = 0; probe < 50; ++probe) {
    const std::vector<double> s{rng.normal(0, 0.5), rng.normal(0, 0.5)};
    const std::vector<double> a{rng.normal(0.0, 0.02), rng.normal(0.05, 0.01)};
    for (auto kind : {RewardKind::gail, RewardKind::fmax_rkl}) {
      const Vector g = reward_grad_action(d, s, a, kind);
      const auto fd = finite_diff([&](std::span<const double> av) { return reward(d, s, av, kind); }, a, 1e-7);
      EXPECT_LT(max_relative_error(std::span<const double>(g.data(), 2), fd, 1e-6), 1e-4);
    }
  }
}

TEST(RewardGrad, ZeroWhereClipActive) {
  Discriminator d(2, 2, small_config(), 17);
  d.net().biases().back()(0) = 40.0;
  const std::vector<double> s{0.3, -0.2}, a{0.1, 0.4};
  EXPECT_EQ(reward_grad_action(d, s, a, RewardKind::fmax_rkl).norm(), 0.0);
  EXPECT_EQ(reward_grad_action(d, s, a, RewardKind::gail).norm(), 0.0);
}

TEST(RewardModels, EnvRewardGradientsMatchFiniteDifferences) {
  Rng rng(23);
  const Car1DReward car;
  const ReachReward reach;
  for (int k = 0; k < 20; ++k) {
    Matrix s(1, 1), a(1, 1), g;
    s(0, 0) = rng.uniform(0, 1);
    a(0, 0) = rng.uniform(0, 0.3);
    car.rewards_and_action_grad(s, a, g);
    const double h = 1e-6;
    Matrix ap = a, am = a;
    ap(0, 0) += h, am(0, 0) -= h;
    EXPECT_NEAR(g(0, 0), (car.rewards(s, ap)(0) - car.rewards(s, am)(0)) / (2 * h), 1e-5);

    Matrix s2(2, 1), a2(2, 1), g2;
    s2 << rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2);
    a2 << rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03);
    reach.rewards_and_action_grad(s2, a2, g2);
    for (int i = 0; i < 2; ++i) {
      Matrix p = a2, m = a2;
      p(i, 0) += h, m(i, 0) -= h;
      EXPECT_NEAR(g2(i, 0), (reach.rewards(s2, p)(0) - reach.rewards(s2, m)(0)) / (2 * h), 1e-6);
    }
  }
}

TEST(GradientPenalty, LinearNetClosedForm) {
  Mlp net({3, 1}, HiddenActivation::tanh, OutputActivation::clip, ClipBounds{});
  net.weights()[0] << 0.5, -2.0, 1.0;
  Matrix x = Matrix::Zero(3, 4);
  const double norm = std::sqrt(0.25 + 4.0 + 1.0);
  const auto gp = input_gradient_penalty(net, x, 4.0);
  EXPECT_NEAR(gp.value, 4.0 * (norm - 1.0) * (norm - 1.0), 1e-12);
  // d/dw of lambda (|w| - 1)^2, summed over identical samples then averaged.
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(gp.grads.weight_grads[0](0, i), 8.0 * (norm - 1.0) * net.weights()[0](0, i) / norm, 1e-12);
}

TEST(GradientPenalty, ParameterGradientMatchesFiniteDifferences) {
  struct Case {
    HiddenActivation h;
    OutputActivation out;
  };
  for (const Case c : {Case{HiddenActivation::tanh, OutputActivation::clip},
                       Case{HiddenActivation::tanh, OutputActivation::tanh},
                       Case{HiddenActivation::leaky_relu, OutputActivation::identity}}) {
    std::optional<ClipBounds> clip;
    if (c.out == OutputActivation::clip) clip = ClipBounds{};
    Mlp net({3, 6, 5, 1}, c.h, c.out, clip);
    Rng rng(31);
    net.init_glorot(rng);
    for (auto& b : net.biases())
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.2, 0.2);
    Matrix x(3, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const auto gp = input_gradient_penalty(net, x, 4.0);
    const auto analytic = flatten_parameter_grads(gp.grads);
    const auto fd =
        finite_diff_param_grad(net, [&](const Mlp& m) { return input_gradient_penalty(m, x, 4.0).value; }, 1e-6);
    EXPECT_LT(max_relative_error(analytic, fd, 1e-6), 1e-5) << to_string(c.h) << "/" << to_string(c.out);
  }
}

TEST(DiscriminatorUpdate, ZeroNetFirstObjective) {
  Discriminator d = zero_disc();
  Rng rng(1);
  const SABatch e = gaussian_batch(rng, 7, 0, 0), a = gaussian_batch(rng, 5, 1, 1);
  EXPECT_NEAR(discriminator_update(d, e, a), 12 * std::log(0.5), 1e-12);
}

TEST(DiscriminatorUpdate, RejectsEmptyBatch) {
  Discriminator d = zero_disc();
  SABatch empty{Matrix(2, 0), Matrix(2, 0)};
  EXPECT_THROW(discriminator_update(d, empty, point_batch(3, 0.0)), ContractViolation);
  EXPECT_THROW(discriminator_update(d, point_batch(3, 0.0), empty), ContractViolation);
}

TEST(DiscriminatorUpdate, SameDistributionStaysNearHalf) {
  Discriminator d(2, 2, DiscriminatorConfig{}, 3);
  Rng rng(9);
  for (int step = 0; step < 300; ++step)
    discriminator_update(d, gaussian_batch(rng, 128, 0.0, 0.0), gaussian_batch(rng, 128, 0.0, 0.0));
  const SABatch probe = gaussian_batch(rng, 2000, 0.0, 0.0);
  const Eigen::RowVectorXd logit = d.logits(probe.states, probe.actions);
  const double mean_d = logit.unaryExpr([](double v) { return sigmoid(v); }).mean();
  EXPECT_NEAR(mean_d, 0.5, 0.05);
}

TEST(DiscriminatorUpdate, DisjointPointsSaturate) {
  // Without the penalty nothing limits the logit slope between the two points.
  Discriminator d(2, 2, small_config(0.0, 1e-3), 5);
  const SABatch e = point_batch(8, 1.0), a = point_batch(8, -1.0);
  for (int step = 0; step < 4000; ++step) discriminator_update(d, e, a);
  const std::vector<double> pe{1.0, 1.0}, pa{-1.0, -1.0};
  EXPECT_GE(sigmoid(d.logit(pe, pe)), sigmoid(9.0));
  EXPECT_LE(sigmoid(d.logit(pa, pa)), sigmoid(-9.0));
}

TEST(DiscriminatorUpdate, ObjectiveNonDecreasingOnSeparableBatch) {
  Discriminator d(2, 2, small_config(0.0, 1e-3), 19);
  Rng rng(4);
  const SABatch e = gaussian_batch(rng, 32, 2.0, 2.0), a = gaussian_batch(rng, 32, -2.0, -2.0);
  double prev = discriminator_update(d, e, a);
  for (int step = 0; step < 300; ++step) {
    const double cur = discriminator_update(d, e, a);
    EXPECT_GE(cur, prev - 1e-9) << "step " << step;
    prev = cur;
  }
  EXPECT_GT(prev, 64 * std::log(0.9));
}

TEST(DiscriminatorUpdate, PenaltyKeepsUpdatesFiniteAndDeterministic) {
  auto run = [] {
    Discriminator d(2, 2, DiscriminatorConfig{}, 21);
    Rng rng(8);
    for (int step = 0; step < 20; ++step)
      discriminator_update(d, gaussian_batch(rng, 64, 1.0, 0.0), gaussian_batch(rng, 64, -1.0, 0.0));
    return d;
  };
  const Discriminator a = run(), b = run();
  EXPECT_TRUE(a.net().all_finite());
  for (std::size_t l = 0; l < a.net().num_layers(); ++l) EXPECT_EQ(a.net().weights()[l], b.net().weights()[l]);
}
