#include "cbo/problem.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "cbo/errors.hpp"

namespace cbo {

BoundedDomain::BoundedDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() < 1 || lower_.size() != upper_.size()) {
    throw InvalidArgument("domain bounds must have equal, positive length");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      std::ostringstream msg;
      msg << "domain bound " << i << " is empty: [" << lower_[i] << ", " << upper_[i] << "]";
      throw InvalidArgument(msg.str());
    }
  }
}

BoundedDomain BoundedDomain::unit(int dim) {
  return BoundedDomain(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

bool BoundedDomain::contains(const Point& x) const {
  if (x.size() != lower_.size()) return false;
  return ((x.array() >= lower_.array()) && (x.array() <= upper_.array())).all();
}

Point BoundedDomain::clip(const Point& x) const {
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

Point BoundedDomain::to_unit(const Point& x) const {
  return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
}

Point BoundedDomain::from_unit(const Point& u) const {
  return lower_ + (u.array() * (upper_ - lower_).array()).matrix();
}

bool all_satisfied(const Eigen::VectorXd& c_values) {
  return (c_values.array() >= 0.0).all();
}

Eigen::VectorXd violations(const Eigen::VectorXd& c_values) {
  return (-c_values).cwiseMax(0.0);
}

Dataset::Dataset(int dim, int num_constraints) : dim_(dim), num_constraints_(num_constraints) {
  if (dim < 1 || num_constraints < 0) {
    throw InvalidArgument("dataset needs dim >= 1 and num_constraints >= 0");
  }
}

namespace {

bool bitwise_equal(const Point& a, const Point& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

bool Dataset::contains(const Point& x) const {
  return std::any_of(samples_.begin(), samples_.end(),
                     [&](const Sample& s) { return bitwise_equal(s.x, x); });
}

void Dataset::append(Sample sample) {
  if (sample.x.size() != dim_ || sample.c_values.size() != num_constraints_) {
    throw InvalidArgument("sample shape does not match dataset");
  }
  if (contains(sample.x)) {
    throw DuplicateSampleError("sample x already present in dataset");
  }
  samples_.push_back(std::move(sample));
}

int Dataset::feasible_count() const {
  return static_cast<int>(
      std::count_if(samples_.begin(), samples_.end(), [](const Sample& s) { return s.feasible; }));
}

Eigen::MatrixXd Dataset::inputs() const {
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(samples_.size()), dim_);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    xs.row(static_cast<Eigen::Index>(i)) = samples_[i].x.transpose();
  }
  return xs;
}

Eigen::VectorXd Dataset::objective_values() const {
  Eigen::VectorXd ys(static_cast<Eigen::Index>(samples_.size()));
  for (std::size_t i = 0; i < samples_.size(); ++i) ys[static_cast<Eigen::Index>(i)] = samples_[i].f_value;
  return ys;
}

Eigen::VectorXd Dataset::constraint_values(int j) const {
  Eigen::VectorXd ys(static_cast<Eigen::Index>(samples_.size()));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    ys[static_cast<Eigen::Index>(i)] = samples_[i].c_values[j];
  }
  return ys;
}

Sample evaluate(const Problem& problem, const Point& x) {
  if (!problem.domain.contains(x)) {
    std::ostringstream msg;
    msg << "point outside domain of " << problem.name << ": [" << x.transpose() << "]";
    throw DomainError(msg.str());
  }
  Sample s;
  s.x = x;
  s.f_value = problem.objective(x);
  s.c_values.resize(problem.num_constraints());
  for (int j = 0; j < problem.num_constraints(); ++j) {
    s.c_values[j] = problem.constraints[static_cast<std::size_t>(j)](x);
  }
  s.feasible = all_satisfied(s.c_values);
  return s;
}

std::optional<FeasibleIncumbent> best_feasible(const Dataset& dataset) {
  std::optional<FeasibleIncumbent> best;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Sample& s = dataset[i];
    if (s.feasible && (!best || s.f_value < best->f_value)) {
      best = FeasibleIncumbent{i, s.f_value};
    }
  }
  return best;
}

double merit_value(const Sample& sample, const Eigen::VectorXd& alpha) {
  return sample.f_value + alpha.dot(violations(sample.c_values));
}

MeritIncumbent best_merit(const Dataset& dataset, const Eigen::VectorXd& alpha) {
  if (dataset.empty()) throw EmptyDatasetError("best_merit on an empty dataset");
  if (alpha.size() != dataset.num_constraints()) {
    throw InvalidArgument("alpha length must equal the constraint count");
  }
  if ((alpha.array() < 0.0).any()) throw InvalidArgument("alpha must be non-negative");

  std::size_t best = 0;
  double best_phi = merit_value(dataset[0], alpha);
  for (std::size_t i = 1; i < dataset.size(); ++i) {
    const double phi = merit_value(dataset[i], alpha);
    if (phi < best_phi) {
      best = i;
      best_phi = phi;
    }
  }
  const Sample& s = dataset[best];
  return MeritIncumbent{best, best_phi, s.f_value, violations(s.c_values)};
}

}  // namespace cbo
