#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cbo/gp.hpp"
#include "cbo/problem.hpp"

namespace cbo {

enum class AcquisitionKind { EI, ECI, EMI1, EMI2, UECI };

std::string to_string(AcquisitionKind kind);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::EI;
  /// Per-constraint penalty weights.
  Eigen::VectorXd alpha;
  /// Weight of the merit branch in UECI.
  double beta = 1.0;
  /// Exploration shift subtracted from the incumbent objective in every EI term.
  double xi = 0.0;
  /// Feasible-sample count at which UCBO switches beta from 1 to 0.
  int feasible_threshold = 1;

  void validate() const;
};

/// Posterior of the objective and of each constraint at one point.
struct PosteriorBundle {
  Prediction objective;
  std::vector<Prediction> constraints;
};

double std_normal_pdf(double z);
double std_normal_cdf(double z);

/// E[max{incumbent_f - xi - Y, 0}] for Y ~ N(mu, sigma^2); exactly 0 when sigma == 0.
double expected_improvement(const Prediction& post, double incumbent_f, double xi = 0.0);

/// prod_j P(c_j >= 0) for independent Gaussian constraint posteriors.
double probability_feasible(const std::vector<Prediction>& constraints);

/// Expected constrained improvement PF(x) * EI(x).
double eci(const PosteriorBundle& post, double incumbent_f, double xi = 0.0);

/// E[max{-Y, 0}] for Y ~ N(mu, sigma^2); the expected violation of c_j >= 0.
double constraint_violation_term(const Prediction& post_cj);

/// Form-1 expected merit improvement. `incumbent` is the merit incumbent;
/// the result may be negative.
double emi_form1(const PosteriorBundle& post, const MeritIncumbent& incumbent,
                 const Eigen::VectorXd& alpha, double xi = 0.0);

/// Form-2 expected merit improvement: phi(x+) - mu_f - sum_j alpha_j E[c_j^+].
double emi_form2(const PosteriorBundle& post, double incumbent_merit, const Eigen::VectorXd& alpha);

/// (1 - beta) ECI + beta EMI1. Throws InvalidArgument when beta < 1 and no
/// feasible incumbent is supplied.
double ueci(const PosteriorBundle& post, std::optional<double> feasible_incumbent_f,
            const MeritIncumbent& merit_incumbent, const Eigen::VectorXd& alpha, double beta,
            double xi = 0.0);

}  // namespace cbo
