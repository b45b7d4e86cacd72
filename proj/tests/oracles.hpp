#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cbo/gp.hpp"

namespace cbo::testing {

/// Running mean and standard error of a sample.
struct MeanSe {
  double sum = 0.0;
  double sum_sq = 0.0;
  long long n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    const double var = (sum_sq / static_cast<double>(n) - m * m) * static_cast<double>(n) /
                       static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

/// Draws from N(mu, sigma^2) with its own generator, independent of the library's RNG helpers.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}
  double operator()(double mu, double sigma) { return mu + sigma * dist_(gen_); }

 private:
  std::mt19937 gen_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Squared-exponential or Matern 5/2 kernel written out directly.
inline double naive_kernel(const KernelConfig& k, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / k.length_scales[i];
    r2 += d * d;
  }
  if (k.family == KernelFamily::SquaredExponential) return k.signal_variance * std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);
  return k.signal_variance * (1.0 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

inline Eigen::MatrixXd naive_gram(const KernelConfig& k, const Eigen::MatrixXd& xs, double nugget) {
  const Eigen::Index t = xs.rows();
  Eigen::MatrixXd g(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      g(i, j) = naive_kernel(k, xs.row(i).transpose(), xs.row(j).transpose());
    }
    g(i, i) += nugget;
  }
  return g;
}

/// Posterior via an explicit inverse of the Gram matrix.
inline std::pair<double, double> naive_posterior(const KernelConfig& k, const Eigen::MatrixXd& xs,
                                                 const Eigen::VectorXd& ys, double mean, double nugget,
                                                 const Eigen::VectorXd& x) {
  const Eigen::MatrixXd inv = naive_gram(k, xs, nugget).inverse();
  Eigen::VectorXd kx(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) kx[i] = naive_kernel(k, xs.row(i).transpose(), x);
  const double mu = kx.dot(inv * (ys.array() - mean).matrix()) + mean;
  const double var = naive_kernel(k, x, x) - kx.dot(inv * kx);
  return {mu, std::sqrt(std::max(var, 0.0))};
}

/// Dense log marginal likelihood with determinant and inverse from a full LU.
inline double naive_lml(const KernelConfig& k, const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                        double mean, double nugget) {
  const Eigen::MatrixXd g = naive_gram(k, xs, nugget);
  const Eigen::VectorXd r = ys.array() - mean;
  const double t = static_cast<double>(xs.rows());
  return -0.5 * r.dot(g.inverse() * r) - 0.5 * std::log(g.determinant()) -
         0.5 * t * std::log(2.0 * 3.14159265358979323846);
}

}  // namespace cbo::testing
