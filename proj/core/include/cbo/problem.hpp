#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cbo {

using Point = Eigen::VectorXd;

/// Hyper-rectangle of box constraints, lower[i] < upper[i] in every dimension.
class BoundedDomain {
 public:
  BoundedDomain(Eigen::VectorXd lower, Eigen::VectorXd upper);

  static BoundedDomain unit(int dim);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd width() const { return upper_ - lower_; }

  bool contains(const Point& x) const;
  Point clip(const Point& x) const;

  /// Affine maps between the domain and [0,1]^n.
  Point to_unit(const Point& x) const;
  Point from_unit(const Point& u) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

using ScalarFunction = std::function<double(const Point&)>;

/// minimize f(x) over the domain subject to c_j(x) >= 0 for every j.
struct Problem {
  std::string name;
  BoundedDomain domain;
  ScalarFunction objective;
  std::vector<ScalarFunction> constraints;

  int dim() const { return domain.dim(); }
  int num_constraints() const { return static_cast<int>(constraints.size()); }
};

struct Sample {
  Point x;
  double f_value = 0.0;
  Eigen::VectorXd c_values;
  bool feasible = false;
};

/// True when every entry is >= 0. Boundary values count as feasible.
bool all_satisfied(const Eigen::VectorXd& c_values);

/// Per-constraint violation max{-c_j, 0}.
Eigen::VectorXd violations(const Eigen::VectorXd& c_values);

class Dataset {
 public:
  Dataset(int dim, int num_constraints);

  /// Throws InvalidArgument on a shape mismatch and DuplicateSampleError when
  /// x is bitwise-equal to a stored sample.
  void append(Sample sample);

  int dim() const { return dim_; }
  int num_constraints() const { return num_constraints_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  bool contains(const Point& x) const;
  int feasible_count() const;

  /// T x n matrix, one row per sample.
  Eigen::MatrixXd inputs() const;
  Eigen::VectorXd objective_values() const;
  Eigen::VectorXd constraint_values(int j) const;

 private:
  int dim_;
  int num_constraints_;
  std::vector<Sample> samples_;
};

/// Throws DomainError when x is outside the problem domain.
Sample evaluate(const Problem& problem, const Point& x);

struct FeasibleIncumbent {
  std::size_t index = 0;
  double f_value = 0.0;
};

/// Lowest objective among feasible samples; earliest index wins ties.
std::optional<FeasibleIncumbent> best_feasible(const Dataset& dataset);

/// Penalty merit phi(x) = f(x) + sum_j alpha_j max{-c_j(x), 0}.
double merit_value(const Sample& sample, const Eigen::VectorXd& alpha);

struct MeritIncumbent {
  std::size_t index = 0;
  double merit = 0.0;
  double f_value = 0.0;
  Eigen::VectorXd violations;  ///< max{-c_j(x+), 0} per constraint
};

/// Sample minimizing the penalty merit; earliest index wins ties.
/// Throws EmptyDatasetError on an empty dataset.
MeritIncumbent best_merit(const Dataset& dataset, const Eigen::VectorXd& alpha);

}  // namespace cbo
