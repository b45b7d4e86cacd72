#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "cbo/problem.hpp"

namespace cbo {

enum class KernelFamily { SquaredExponential, Matern52 };

/// Stationary ARD kernel k(a, b) = signal_variance * rho(r), with
/// r^2 = sum_i ((a_i - b_i) / length_scales_i)^2.
struct KernelConfig {
  KernelFamily family = KernelFamily::Matern52;
  Eigen::VectorXd length_scales;
  double signal_variance = 1.0;
  /// Jitter added to the Gram diagonal.
  double nugget = 1e-10;

  void validate() const;
};

double kernel_eval(const KernelConfig& config, const Point& a, const Point& b);

/// T x T kernel matrix over the rows of xs, without the nugget.
Eigen::MatrixXd gram_matrix(const KernelConfig& config, const Eigen::MatrixXd& xs);

/// T x N matrix of k(xs_i, queries_j).
Eigen::MatrixXd cross_covariance(const KernelConfig& config, const Eigen::MatrixXd& xs,
                                 const Eigen::MatrixXd& queries);

struct Prediction {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Exact noise-free GP posterior with a constant prior mean.
///
/// Immutable after fit(); prediction is read-only and thread-safe.
class SurrogateModel {
 public:
  /// The kernel actually used. Its nugget reflects any escalation done by fit().
  const KernelConfig& kernel() const { return kernel_; }
  const Eigen::MatrixXd& train_x() const { return train_x_; }
  const Eigen::VectorXd& train_y() const { return train_y_; }
  double mean_const() const { return mean_const_; }
  /// Lower-triangular L with L L^T = K + nugget I.
  const Eigen::MatrixXd& chol_factor() const { return chol_; }
  /// Solution w of (K + nugget I) w = y - m.
  const Eigen::VectorXd& alpha_weights() const { return weights_; }

  Prediction predict(const Point& x) const;

  /// Posterior variance before the clamp at zero.
  double raw_variance(const Point& x) const;

  /// Rows of `queries` are points. Writes posterior mean and standard deviation.
  void predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mu,
                     Eigen::VectorXd& sigma) const;

  /// log p(y | X, theta) from the Cholesky factor.
  double log_marginal_likelihood() const;

 private:
  friend SurrogateModel fit(const KernelConfig&, const Eigen::MatrixXd&, const Eigen::VectorXd&,
                            double);

  KernelConfig kernel_;
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd train_y_;
  double mean_const_ = 0.0;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd weights_;
};

/// Factorizes K + nugget I. On failure the nugget is raised tenfold from
/// max(nugget, 1e-10) until it exceeds 1e-4, then FitError is thrown.
SurrogateModel fit(const KernelConfig& kernel, const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                   double mean_const);

struct HyperparameterSearch {
  KernelFamily family = KernelFamily::Matern52;
  int restarts = 8;
  std::uint64_t seed = 0;
  double min_length_scale = 1e-2;
  double max_length_scale = 1e1;
  double min_signal_variance = 1e-2;
  double max_signal_variance = 1e2;
  /// Coordinate-descent step in natural-log units, halved on every sweep
  /// without improvement until it drops below min_step.
  double initial_step = 1.0;
  double min_step = 1.0 / 32.0;
  int max_evaluations = 60;
};

/// Maximizes the log marginal likelihood by multi-start coordinate descent over
/// log length scales. The signal variance is profiled out in closed form
/// (q / T, clamped to its bounds) for each length-scale candidate, and the
/// nugget is expressed relative to it. Deterministic given search.seed.
KernelConfig fit_hyperparameters(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                 double mean_const, const HyperparameterSearch& search);

/// GP over a bounded domain. Inputs are mapped to [0,1]^n and outputs
/// standardized before fitting; predictions come back in original units.
class Surrogate {
 public:
  static Surrogate train(const BoundedDomain& domain, const Eigen::MatrixXd& xs,
                         const Eigen::VectorXd& ys, const HyperparameterSearch& search);

  Prediction predict(const Point& x) const;
  void predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mu,
                     Eigen::VectorXd& sigma) const;

  const SurrogateModel& model() const { return model_; }
  double y_offset() const { return y_offset_; }
  double y_scale() const { return y_scale_; }

 private:
  Surrogate(BoundedDomain domain, SurrogateModel model, double offset, double scale)
      : domain_(std::move(domain)), model_(std::move(model)), y_offset_(offset), y_scale_(scale) {}

  Eigen::MatrixXd to_unit_rows(const Eigen::MatrixXd& xs) const;

  BoundedDomain domain_;
  SurrogateModel model_;
  double y_offset_;
  double y_scale_;
};

}  // namespace cbo
