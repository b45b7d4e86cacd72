#include "cbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>

#include "cbo/errors.hpp"
#include "cbo/random.hpp"

namespace cbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kMinNugget = 1e-10;
constexpr double kMaxNugget = 1e-4;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double correlation(KernelFamily family, double r2) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return std::exp(-0.5 * r2);
    case KernelFamily::Matern52: {
      const double r = std::sqrt(r2);
      return (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
    }
  }
  return 0.0;
}

/// Elementwise correlation over a matrix of squared scaled distances.
Eigen::ArrayXXd correlation(KernelFamily family, const Eigen::ArrayXXd& r2) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return (-0.5 * r2).exp();
    case KernelFamily::Matern52: {
      const Eigen::ArrayXXd r = r2.sqrt();
      return (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * (-kSqrt5 * r).exp();
    }
  }
  return Eigen::ArrayXXd::Zero(r2.rows(), r2.cols());
}

Eigen::ArrayXXd scaled_sq_distances(const Eigen::VectorXd& length_scales, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b) {
  const Eigen::VectorXd inv = length_scales.cwiseInverse();
  const Eigen::MatrixXd sa = a * inv.asDiagonal();
  const Eigen::MatrixXd sb = b * inv.asDiagonal();
  Eigen::ArrayXXd r2(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    r2.col(j) = (sa.rowwise() - sb.row(j)).rowwise().squaredNorm().array();
  }
  return r2;
}

/// Returns false when the factorization fails or yields a non-positive pivot.
bool try_cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  const auto diag = lower.diagonal().array();
  return diag.allFinite() && (diag > 0.0).all();
}

}  // namespace

void KernelConfig::validate() const {
  if (length_scales.size() < 1) throw InvalidArgument("kernel needs at least one length scale");
  if (!(length_scales.array() > 0.0).all()) throw InvalidArgument("length scales must be positive");
  if (!(signal_variance > 0.0)) throw InvalidArgument("signal variance must be positive");
  if (!(nugget >= 0.0)) throw InvalidArgument("nugget must be non-negative");
}

double kernel_eval(const KernelConfig& config, const Point& a, const Point& b) {
  if (a.size() != b.size() || a.size() != config.length_scales.size()) {
    throw InvalidArgument("kernel_eval: dimension mismatch");
  }
  const double r2 = ((a - b).array() / config.length_scales.array()).square().sum();
  return config.signal_variance * correlation(config.family, r2);
}

Eigen::MatrixXd gram_matrix(const KernelConfig& config, const Eigen::MatrixXd& xs) {
  return cross_covariance(config, xs, xs);
}

Eigen::MatrixXd cross_covariance(const KernelConfig& config, const Eigen::MatrixXd& xs,
                                 const Eigen::MatrixXd& queries) {
  if (xs.cols() != config.length_scales.size() || queries.cols() != xs.cols()) {
    throw InvalidArgument("cross_covariance: dimension mismatch");
  }
  const Eigen::ArrayXXd r2 = scaled_sq_distances(config.length_scales, xs, queries);
  return (config.signal_variance * correlation(config.family, r2)).matrix();
}

SurrogateModel fit(const KernelConfig& kernel, const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                   double mean_const) {
  kernel.validate();
  if (xs.rows() < 1) throw InvalidArgument("fit needs at least one training point");
  if (xs.rows() != ys.size()) throw InvalidArgument("fit: xs and ys disagree on T");
  if (xs.cols() != kernel.length_scales.size()) throw InvalidArgument("fit: dimension mismatch");

  SurrogateModel model;
  model.kernel_ = kernel;
  model.train_x_ = xs;
  model.train_y_ = ys;
  model.mean_const_ = mean_const;

  const Eigen::MatrixXd k = gram_matrix(kernel, xs);
  const Eigen::Index t = xs.rows();
  double nugget = kernel.nugget;
  while (true) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += nugget;
    if (try_cholesky(a, model.chol_)) break;
    nugget = std::max(nugget, kMinNugget) * 10.0;
    if (nugget > kMaxNugget * (1.0 + 1e-9)) {
      std::ostringstream msg;
      msg << "Gram matrix (T=" << t << ") not positive definite with nugget up to " << kMaxNugget;
      throw FitError(msg.str());
    }
  }
  model.kernel_.nugget = nugget;

  const Eigen::VectorXd centered = ys.array() - mean_const;
  model.weights_ = model.chol_.triangularView<Eigen::Lower>().solve(centered);
  model.chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(model.weights_);
  return model;
}

double SurrogateModel::raw_variance(const Point& x) const {
  const Eigen::VectorXd ks = cross_covariance(kernel_, train_x_, x.transpose());
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  return kernel_.signal_variance - v.squaredNorm();
}

Prediction SurrogateModel::predict(const Point& x) const {
  if (x.size() != train_x_.cols()) throw InvalidArgument("predict: dimension mismatch");
  const Eigen::VectorXd ks = cross_covariance(kernel_, train_x_, x.transpose());
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  const double var = kernel_.signal_variance - v.squaredNorm();
  return Prediction{ks.dot(weights_) + mean_const_, std::sqrt(std::max(var, 0.0))};
}

void SurrogateModel::predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mu,
                                   Eigen::VectorXd& sigma) const {
  const Eigen::MatrixXd ks = cross_covariance(kernel_, train_x_, queries);
  mu = (ks.transpose() * weights_).array() + mean_const_;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  sigma = (kernel_.signal_variance - v.colwise().squaredNorm().array()).max(0.0).sqrt().matrix().transpose();
}

double SurrogateModel::log_marginal_likelihood() const {
  const double t = static_cast<double>(train_y_.size());
  const Eigen::VectorXd centered = train_y_.array() - mean_const_;
  return -0.5 * centered.dot(weights_) - chol_.diagonal().array().log().sum() - 0.5 * t * kLog2Pi;
}

namespace {

/// Profiled log marginal likelihood over log length scales.
class ProfiledLikelihood {
 public:
  ProfiledLikelihood(KernelFamily family, const Eigen::MatrixXd& xs, const Eigen::VectorXd& centered,
                     const HyperparameterSearch& search)
      : family_(family), centered_(centered), search_(search) {
    const Eigen::Index t = xs.rows();
    sq_diff_.reserve(static_cast<std::size_t>(xs.cols()));
    for (Eigen::Index d = 0; d < xs.cols(); ++d) {
      const Eigen::ArrayXd col = xs.col(d).array();
      Eigen::ArrayXXd diff(t, t);
      for (Eigen::Index j = 0; j < t; ++j) diff.col(j) = (col - col[j]).square();
      sq_diff_.push_back(std::move(diff));
    }
  }

  struct Result {
    double value = -std::numeric_limits<double>::infinity();
    double signal_variance = 1.0;
    double relative_nugget = kMinNugget;
  };

  Result operator()(const Eigen::VectorXd& log_ls) const {
    const Eigen::Index t = centered_.size();
    Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(t, t);
    for (std::size_t d = 0; d < sq_diff_.size(); ++d) {
      r2 += sq_diff_[d] * std::exp(-2.0 * log_ls[static_cast<Eigen::Index>(d)]);
    }
    const Eigen::MatrixXd corr = correlation(family_, r2).matrix();

    Result out;
    Eigen::MatrixXd lower;
    for (double eta = kMinNugget; eta <= kMaxNugget * (1.0 + 1e-9); eta *= 10.0) {
      Eigen::MatrixXd a = corr;
      a.diagonal().array() += eta;
      if (!try_cholesky(a, lower)) continue;
      const Eigen::VectorXd z = lower.triangularView<Eigen::Lower>().solve(centered_);
      const double q = z.squaredNorm();
      const double n = static_cast<double>(t);
      const double s2 = std::clamp(q / n, search_.min_signal_variance, search_.max_signal_variance);
      out.value = -0.5 * q / s2 - 0.5 * n * std::log(s2) - lower.diagonal().array().log().sum() -
                  0.5 * n * kLog2Pi;
      out.signal_variance = s2;
      out.relative_nugget = eta;
      return out;
    }
    return out;
  }

 private:
  KernelFamily family_;
  Eigen::VectorXd centered_;
  const HyperparameterSearch& search_;
  std::vector<Eigen::ArrayXXd> sq_diff_;
};

}  // namespace

KernelConfig fit_hyperparameters(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                 double mean_const, const HyperparameterSearch& search) {
  if (xs.rows() < 1 || xs.rows() != ys.size()) {
    throw InvalidArgument("fit_hyperparameters: xs and ys disagree or are empty");
  }
  if (search.restarts < 1 || !(search.min_length_scale > 0.0) ||
      !(search.min_length_scale <= search.max_length_scale) ||
      !(search.min_signal_variance > 0.0) ||
      !(search.min_signal_variance <= search.max_signal_variance)) {
    throw InvalidArgument("fit_hyperparameters: invalid search configuration");
  }

  const Eigen::Index n = xs.cols();
  const Eigen::VectorXd centered = ys.array() - mean_const;
  const ProfiledLikelihood likelihood(search.family, xs, centered, search);

  const double lo = std::log(search.min_length_scale);
  const double hi = std::log(search.max_length_scale);
  Rng rng(derive_seed(search.seed, 0x6770));

  bool found = false;
  Eigen::VectorXd best_point;
  ProfiledLikelihood::Result best;

  for (int restart = 0; restart < search.restarts; ++restart) {
    Eigen::VectorXd current(n);
    for (Eigen::Index d = 0; d < n; ++d) {
      current[d] = restart == 0 ? 0.5 * (lo + hi) : lo + (hi - lo) * uniform01(rng);
    }
    ProfiledLikelihood::Result value = likelihood(current);
    int evaluations = 1;
    double step = search.initial_step;

    while (step >= search.min_step && evaluations < search.max_evaluations) {
      bool improved = false;
      for (Eigen::Index d = 0; d < n && evaluations < search.max_evaluations; ++d) {
        for (const double sign : {1.0, -1.0}) {
          Eigen::VectorXd candidate = current;
          candidate[d] = std::clamp(current[d] + sign * step, lo, hi);
          if (candidate[d] == current[d]) continue;
          const ProfiledLikelihood::Result trial = likelihood(candidate);
          ++evaluations;
          if (trial.value > value.value) {
            current = std::move(candidate);
            value = trial;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }

    if (std::isfinite(value.value) && (!found || value.value > best.value)) {
      found = true;
      best = value;
      best_point = current;
    }
  }

  if (!found) throw FitError("no hyperparameter candidate produced a positive definite Gram matrix");

  KernelConfig config;
  config.family = search.family;
  config.length_scales = best_point.array().exp();
  config.signal_variance = best.signal_variance;
  config.nugget = best.relative_nugget * best.signal_variance;
  return config;
}

Eigen::MatrixXd Surrogate::to_unit_rows(const Eigen::MatrixXd& xs) const {
  const Eigen::RowVectorXd lower = domain_.lower().transpose();
  const Eigen::RowVectorXd inv_width = domain_.width().cwiseInverse().transpose();
  return ((xs.rowwise() - lower).array().rowwise() * inv_width.array()).matrix();
}

Surrogate Surrogate::train(const BoundedDomain& domain, const Eigen::MatrixXd& xs,
                           const Eigen::VectorXd& ys, const HyperparameterSearch& search) {
  if (xs.cols() != domain.dim()) throw InvalidArgument("Surrogate::train: dimension mismatch");
  const double offset = ys.mean();
  const double spread = std::sqrt((ys.array() - offset).square().mean());
  const double scale = spread > 1e-12 * std::max(1.0, std::abs(offset)) ? spread : 1.0;

  Surrogate tmp(domain, SurrogateModel{}, offset, scale);
  const Eigen::MatrixXd unit = tmp.to_unit_rows(xs);
  const Eigen::VectorXd standardized = (ys.array() - offset) / scale;
  const KernelConfig config = fit_hyperparameters(unit, standardized, 0.0, search);
  tmp.model_ = fit(config, unit, standardized, 0.0);
  return tmp;
}

Prediction Surrogate::predict(const Point& x) const {
  const Prediction p = model_.predict(domain_.to_unit(x));
  return Prediction{y_offset_ + y_scale_ * p.mu, y_scale_ * p.sigma};
}

void Surrogate::predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mu,
                              Eigen::VectorXd& sigma) const {
  model_.predict_batch(to_unit_rows(queries), mu, sigma);
  mu = (mu.array() * y_scale_ + y_offset_).matrix();
  sigma *= y_scale_;
}

}  // namespace cbo
