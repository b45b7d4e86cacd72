#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cbo/errors.hpp"
#include "cbo/gp.hpp"
#include "oracles.hpp"

namespace cbo {
namespace {

Eigen::MatrixXd random_points(std::mt19937_64& gen, int t, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd xs(t, n);
  for (int i = 0; i < t; ++i) {
    for (int d = 0; d < n; ++d) xs(i, d) = u(gen);
  }
  return xs;
}

KernelConfig kernel(KernelFamily family, int n, double ls, double sv, double nugget) {
  KernelConfig k;
  k.family = family;
  k.length_scales = Eigen::VectorXd::Constant(n, ls);
  k.signal_variance = sv;
  k.nugget = nugget;
  return k;
}

TEST(Kernel, ZeroDistanceGivesSignalVariance) {
  const Point a = Eigen::Vector2d(0.3, 0.7);
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    EXPECT_DOUBLE_EQ(kernel_eval(kernel(family, 2, 0.4, 2.5, 0.0), a, a), 2.5);
  }
}

TEST(Kernel, SquaredExponentialAtSqrtTwo) {
  const Point a = Eigen::Vector2d(0.0, 0.0);
  const Point b = Eigen::Vector2d(1.0, 1.0);
  EXPECT_NEAR(kernel_eval(kernel(KernelFamily::SquaredExponential, 2, 1.0, 1.0, 0.0), a, b),
              std::exp(-1.0), 1e-15);
}

TEST(Kernel, SymmetricAndMatchesDirectFormula) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    KernelConfig k = kernel(trial % 2 ? KernelFamily::Matern52 : KernelFamily::SquaredExponential, 3,
                            1.0, 0.5 + std::abs(u(gen)), 0.0);
    for (int d = 0; d < 3; ++d) k.length_scales[d] = 0.1 + std::abs(u(gen));
    const Point a = Eigen::Vector3d(u(gen), u(gen), u(gen));
    const Point b = Eigen::Vector3d(u(gen), u(gen), u(gen));
    EXPECT_EQ(kernel_eval(k, a, b), kernel_eval(k, b, a));
    EXPECT_NEAR(kernel_eval(k, a, b), testing::naive_kernel(k, a, b), 1e-14);
  }
}

TEST(Kernel, DimensionMismatchThrows) {
  EXPECT_THROW(kernel_eval(kernel(KernelFamily::Matern52, 2, 1.0, 1.0, 0.0), Eigen::Vector2d(0, 0),
                           Eigen::Vector3d(0, 0, 0)),
               InvalidArgument);
}

TEST(Fit, SinglePointInterpolates) {
  Eigen::MatrixXd xs(1, 1);
  xs << 0.4;
  const SurrogateModel m = fit(kernel(KernelFamily::Matern52, 1, 0.3, 1.0, 1e-10), xs,
                               Eigen::VectorXd::Constant(1, 5.0), 0.0);
  EXPECT_NEAR(m.predict(Eigen::VectorXd::Constant(1, 0.4)).mu, 5.0, 1e-6);
}

TEST(Fit, SymmetricDataGivesEqualPredictions) {
  Eigen::MatrixXd xs(2, 1);
  xs << 0.25, 0.75;
  const SurrogateModel m = fit(kernel(KernelFamily::Matern52, 1, 0.3, 1.0, 1e-10), xs,
                               Eigen::Vector2d(2.0, 2.0), 0.0);
  const Prediction a = m.predict(Eigen::VectorXd::Constant(1, 0.25));
  const Prediction b = m.predict(Eigen::VectorXd::Constant(1, 0.75));
  EXPECT_NEAR(a.mu, b.mu, 1e-12);
  EXPECT_NEAR(a.sigma, b.sigma, 1e-12);
}

TEST(Fit, CholeskyReconstruction) {
  std::mt19937_64 gen(3);
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    const Eigen::MatrixXd xs = random_points(gen, 8, 2);
    const KernelConfig k = kernel(family, 2, 0.5, 1.3, 1e-10);
    const SurrogateModel m = fit(k, xs, Eigen::VectorXd::Random(8), 0.0);
    const Eigen::MatrixXd& l = m.chol_factor();
    EXPECT_TRUE(l.isLowerTriangular());
    EXPECT_TRUE((l.diagonal().array() > 0.0).all());
    const Eigen::MatrixXd gram = testing::naive_gram(k, xs, 0.0);
    Eigen::MatrixXd target = gram;
    target.diagonal().array() += m.kernel().nugget;
    EXPECT_LT((l * l.transpose() - target).norm() / gram.norm(), 1e-10);
  }
}

TEST(Fit, NuggetEscalatesOnNearDuplicates) {
  Eigen::MatrixXd xs(3, 1);
  xs << 0.5, 0.5 + 1e-12, 0.9;
  const SurrogateModel m = fit(kernel(KernelFamily::SquaredExponential, 1, 1.0, 1.0, 0.0), xs,
                               Eigen::Vector3d(1.0, 1.0, 0.0), 0.0);
  EXPECT_GT(m.kernel().nugget, 0.0);
  EXPECT_LE(m.kernel().nugget, 1e-4);
}

TEST(Fit, FailsWhenNuggetCannotRescue) {
  Eigen::MatrixXd xs(2, 1);
  xs << 0.5, 0.5;
  KernelConfig k = kernel(KernelFamily::SquaredExponential, 1, 1.0, 1.0, 0.0);
  k.signal_variance = 1e20;  // a 1e-4 nugget is below the rounding at this scale
  EXPECT_THROW(fit(k, xs, Eigen::Vector2d(1.0, 2.0), 0.0), FitError);
}

TEST(Predict, InterpolatesWithoutNugget) {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd xs = random_points(gen, 6, 2);
  const Eigen::VectorXd ys = Eigen::VectorXd::Random(6);
  const SurrogateModel m = fit(kernel(KernelFamily::Matern52, 2, 0.4, 1.0, 0.0), xs, ys, 0.0);
  for (int i = 0; i < 6; ++i) {
    const Prediction p = m.predict(xs.row(i).transpose());
    EXPECT_NEAR(p.mu, ys[i], 1e-6);
    EXPECT_LT(p.sigma, 1e-6);
  }
}

TEST(Predict, PriorRecoveredFarAway) {
  Eigen::MatrixXd xs(2, 1);
  xs << 0.0, 0.1;
  const SurrogateModel m = fit(kernel(KernelFamily::Matern52, 1, 0.1, 2.0, 1e-10), xs,
                               Eigen::Vector2d(3.0, -1.0), 0.0);
  const Prediction p = m.predict(Eigen::VectorXd::Constant(1, 100.0));
  EXPECT_NEAR(p.mu, 0.0, 1e-12);
  EXPECT_NEAR(p.sigma, std::sqrt(2.0), 1e-12);
}

TEST(Predict, MatchesExplicitInverse) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd xs = random_points(gen, 5, 2);
    const Eigen::VectorXd ys = Eigen::VectorXd::Random(5);
    const KernelConfig k = kernel(KernelFamily::Matern52, 2, 0.6, 1.5, 1e-8);
    const SurrogateModel m = fit(k, xs, ys, 0.3);
    const Point x = random_points(gen, 1, 2).row(0).transpose();
    const auto [mu, sigma] = testing::naive_posterior(k, xs, ys, 0.3, m.kernel().nugget, x);
    const Prediction p = m.predict(x);
    EXPECT_NEAR(p.mu, mu, 1e-8);
    EXPECT_NEAR(p.sigma, sigma, 1e-8);
  }
}

TEST(Predict, BatchMatchesSingle) {
  std::mt19937_64 gen(19);
  const Eigen::MatrixXd xs = random_points(gen, 7, 3);
  const SurrogateModel m =
      fit(kernel(KernelFamily::Matern52, 3, 0.5, 1.0, 1e-10), xs, Eigen::VectorXd::Random(7), 0.1);
  const Eigen::MatrixXd qs = random_points(gen, 25, 3);
  Eigen::VectorXd mu, sigma;
  m.predict_batch(qs, mu, sigma);
  for (int i = 0; i < 25; ++i) {
    const Prediction p = m.predict(qs.row(i).transpose());
    EXPECT_NEAR(mu[i], p.mu, 1e-12);
    EXPECT_NEAR(sigma[i], p.sigma, 1e-12);
  }
}

TEST(Predict, RawVarianceNegativePartIsTiny) {
  std::mt19937_64 gen(23);
  const Eigen::MatrixXd xs = random_points(gen, 8, 2);
  const SurrogateModel m =
      fit(kernel(KernelFamily::Matern52, 2, 0.3, 1.0, 1e-10), xs, Eigen::VectorXd::Random(8), 0.0);
  for (int i = 0; i < 8; ++i) EXPECT_GT(m.raw_variance(xs.row(i).transpose()), -1e-9);
  for (int i = 0; i < 200; ++i) {
    EXPECT_GT(m.raw_variance(random_points(gen, 1, 2).row(0).transpose()), -1e-9);
  }
}

TEST(LogMarginalLikelihood, MatchesDenseFormula) {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd xs = random_points(gen, 6, 2);
    const Eigen::VectorXd ys = Eigen::VectorXd::Random(6);
    const KernelConfig k = kernel(KernelFamily::SquaredExponential, 2, 0.4, 0.8, 1e-6);
    const SurrogateModel m = fit(k, xs, ys, -0.2);
    EXPECT_NEAR(m.log_marginal_likelihood(), testing::naive_lml(k, xs, ys, -0.2, m.kernel().nugget),
                1e-8);
  }
}

TEST(Hyperparameters, ConstantTargetsPickSmallestSignalVariance) {
  std::mt19937_64 gen(31);
  const Eigen::MatrixXd xs = random_points(gen, 10, 2);
  HyperparameterSearch search;
  const KernelConfig k = fit_hyperparameters(xs, Eigen::VectorXd::Constant(10, 4.0), 4.0, search);
  EXPECT_DOUBLE_EQ(k.signal_variance, search.min_signal_variance);
}

TEST(Hyperparameters, ConstantTargetsBruteForceAgrees) {
  // Every length scale on a coarse grid: the likelihood is maximized at the
  // smallest signal variance regardless of length scale.
  std::mt19937_64 gen(37);
  const Eigen::MatrixXd xs = random_points(gen, 6, 1);
  const Eigen::VectorXd ys = Eigen::VectorXd::Constant(6, 1.0);
  HyperparameterSearch search;
  for (double ls : {0.01, 0.1, 1.0, 10.0}) {
    double best_sv = 0.0;
    double best = -1e300;
    for (double sv : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      const double v = fit(kernel(KernelFamily::Matern52, 1, ls, sv, 1e-10 * sv), xs, ys, 0.9)
                           .log_marginal_likelihood();
      if (v > best) {
        best = v;
        best_sv = sv;
      }
    }
    EXPECT_DOUBLE_EQ(best_sv, 0.01);
  }
  EXPECT_DOUBLE_EQ(fit_hyperparameters(xs, ys, 0.9, search).signal_variance, 0.01);
}

TEST(Hyperparameters, RecoversKnownLengthScale) {
  // Draw 30 values from a GP with length scale 0.3 and refit.
  std::mt19937_64 gen(41);
  const Eigen::MatrixXd xs = random_points(gen, 30, 1);
  const KernelConfig truth = kernel(KernelFamily::Matern52, 1, 0.3, 1.0, 0.0);
  const Eigen::MatrixXd gram = testing::naive_gram(truth, xs, 1e-10);
  const Eigen::MatrixXd l = gram.llt().matrixL();
  std::normal_distribution<double> z;
  Eigen::VectorXd w(30);
  for (int i = 0; i < 30; ++i) w[i] = z(gen);
  const Eigen::VectorXd ys = l * w;

  HyperparameterSearch search;
  search.seed = 3;
  const KernelConfig k = fit_hyperparameters(xs, ys, 0.0, search);
  EXPECT_GE(k.length_scales[0], 0.15);
  EXPECT_LE(k.length_scales[0], 0.6);
}

TEST(Hyperparameters, TwoPointsComplete) {
  Eigen::MatrixXd xs(2, 2);
  xs << 0.1, 0.2, 0.8, 0.5;
  const KernelConfig k = fit_hyperparameters(xs, Eigen::Vector2d(1.0, -1.0), 0.0, {});
  EXPECT_NO_THROW(k.validate());
}

TEST(Hyperparameters, DeterministicGivenSeed) {
  std::mt19937_64 gen(43);
  const Eigen::MatrixXd xs = random_points(gen, 12, 3);
  const Eigen::VectorXd ys = Eigen::VectorXd::Random(12);
  HyperparameterSearch search;
  search.seed = 99;
  const KernelConfig a = fit_hyperparameters(xs, ys, 0.0, search);
  const KernelConfig b = fit_hyperparameters(xs, ys, 0.0, search);
  EXPECT_EQ(a.length_scales, b.length_scales);
  EXPECT_EQ(a.signal_variance, b.signal_variance);
  EXPECT_EQ(a.nugget, b.nugget);
}

TEST(Hyperparameters, SelectedConfigIsAtLeastAsLikelyAsStart) {
  std::mt19937_64 gen(47);
  const Eigen::MatrixXd xs = random_points(gen, 15, 2);
  Eigen::VectorXd ys(15);
  for (int i = 0; i < 15; ++i) ys[i] = std::sin(6.0 * xs(i, 0)) + xs(i, 1);
  HyperparameterSearch search;
  const KernelConfig best = fit_hyperparameters(xs, ys, 0.0, search);
  const double chosen = fit(best, xs, ys, 0.0).log_marginal_likelihood();
  // Restart 0 starts at the log-midpoint of the bounds.
  KernelConfig mid = best;
  mid.length_scales.setConstant(std::sqrt(search.min_length_scale * search.max_length_scale));
  for (double sv : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    mid.signal_variance = sv;
    mid.nugget = 1e-10 * sv;
    EXPECT_GE(chosen, fit(mid, xs, ys, 0.0).log_marginal_likelihood() - 1e-9);
  }
}

TEST(Surrogate, StandardizesAndMapsInputs) {
  const BoundedDomain domain(Eigen::Vector2d(0.0, -5.0), Eigen::Vector2d(6.0, 5.0));
  std::mt19937_64 gen(53);
  Eigen::MatrixXd xs = random_points(gen, 10, 2);
  xs.col(0) *= 6.0;
  xs.col(1) = xs.col(1) * 10.0 - Eigen::VectorXd::Constant(10, 5.0);
  Eigen::VectorXd ys(10);
  for (int i = 0; i < 10; ++i) ys[i] = 100.0 + 20.0 * std::sin(xs(i, 0)) + xs(i, 1);
  const Surrogate s = Surrogate::train(domain, xs, ys, {});
  EXPECT_NEAR(s.y_offset(), ys.mean(), 1e-12);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(s.predict(xs.row(i).transpose()).mu, ys[i], 1e-4);
}

TEST(Surrogate, ConstantTargetsUseUnitScale) {
  const BoundedDomain domain = BoundedDomain::unit(1);
  Eigen::MatrixXd xs(3, 1);
  xs << 0.1, 0.5, 0.9;
  const Surrogate s = Surrogate::train(domain, xs, Eigen::Vector3d(-0.95, -0.95, -0.95), {});
  EXPECT_DOUBLE_EQ(s.y_scale(), 1.0);
  EXPECT_NEAR(s.predict(Eigen::VectorXd::Constant(1, 0.3)).mu, -0.95, 1e-9);
}

}  // namespace
}  // namespace cbo
