#include "cbo/acquisition.hpp"

#include <cmath>
#include <numbers>

#include "cbo/errors.hpp"

namespace cbo {

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::EI: return "EI";
    case AcquisitionKind::ECI: return "ECI";
    case AcquisitionKind::EMI1: return "EMI1";
    case AcquisitionKind::EMI2: return "EMI2";
    case AcquisitionKind::UECI: return "UECI";
  }
  return "?";
}

void AcquisitionSpec::validate() const {
  if ((alpha.array() < 0.0).any()) throw InvalidArgument("alpha must be non-negative");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
  if (!(xi >= 0.0)) throw InvalidArgument("xi must be non-negative");
  if (feasible_threshold < 1) throw InvalidArgument("feasible threshold must be >= 1");
}

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double expected_improvement(const Prediction& post, double incumbent_f, double xi) {
  if (post.sigma <= 0.0) return 0.0;
  const double gap = incumbent_f - xi - post.mu;
  const double z = gap / post.sigma;
  return std::max(0.0, gap * std_normal_cdf(z) + post.sigma * std_normal_pdf(z));
}

double probability_feasible(const std::vector<Prediction>& constraints) {
  double pf = 1.0;
  for (const Prediction& c : constraints) {
    if (c.sigma <= 0.0) {
      pf *= c.mu >= 0.0 ? 1.0 : 0.0;
    } else {
      pf *= std_normal_cdf(c.mu / c.sigma);
    }
  }
  return pf;
}

double eci(const PosteriorBundle& post, double incumbent_f, double xi) {
  return probability_feasible(post.constraints) * expected_improvement(post.objective, incumbent_f, xi);
}

double constraint_violation_term(const Prediction& post_cj) {
  if (post_cj.sigma <= 0.0) return std::max(-post_cj.mu, 0.0);
  const double z = -post_cj.mu / post_cj.sigma;
  return std::max(0.0, -post_cj.mu * std_normal_cdf(z) + post_cj.sigma * std_normal_pdf(z));
}

namespace {

double expected_penalty(const PosteriorBundle& post, const Eigen::VectorXd& alpha) {
  if (alpha.size() != static_cast<Eigen::Index>(post.constraints.size())) {
    throw InvalidArgument("alpha length must equal the constraint count");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < post.constraints.size(); ++j) {
    const double a = alpha[static_cast<Eigen::Index>(j)];
    if (a != 0.0) total += a * constraint_violation_term(post.constraints[j]);
  }
  return total;
}

}  // namespace

double emi_form1(const PosteriorBundle& post, const MeritIncumbent& incumbent,
                 const Eigen::VectorXd& alpha, double xi) {
  const double offset = incumbent.violations.size() == 0 ? 0.0 : alpha.dot(incumbent.violations);
  return expected_improvement(post.objective, incumbent.f_value, xi) + offset -
         expected_penalty(post, alpha);
}

double emi_form2(const PosteriorBundle& post, double incumbent_merit, const Eigen::VectorXd& alpha) {
  return incumbent_merit - post.objective.mu - expected_penalty(post, alpha);
}

double ueci(const PosteriorBundle& post, std::optional<double> feasible_incumbent_f,
            const MeritIncumbent& merit_incumbent, const Eigen::VectorXd& alpha, double beta,
            double xi) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
  double value = 0.0;
  if (beta < 1.0) {
    if (!feasible_incumbent_f) {
      throw InvalidArgument("UECI with beta < 1 needs a feasible incumbent");
    }
    value += (1.0 - beta) * eci(post, *feasible_incumbent_f, xi);
  }
  if (beta > 0.0) value += beta * emi_form1(post, merit_incumbent, alpha, xi);
  return value;
}

}  // namespace cbo
