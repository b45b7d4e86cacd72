#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cbo/acquisition.hpp"
#include "cbo/gp.hpp"
#include "cbo/problem.hpp"

namespace cbo {

/// The four outer loops the harness can run.
enum class Algorithm { Emi1, Emi2, Ucbo, Eci };

std::string to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);
std::vector<Algorithm> all_algorithms();
AcquisitionKind acquisition_kind(Algorithm algorithm);

struct MaximizerConfig {
  int candidate_count = 8192;
  /// Pattern-search steps after candidate scoring; 0 keeps the best candidate.
  int refine_steps = 0;
};

struct AlphaPhase {
  int start_iteration = 0;
  Eigen::VectorXd alpha;
};

/// How the penalty vector evolves between iterations.
struct AlphaRule {
  enum class Kind { Constant, MultiplyOnInfeasible, Piecewise };

  Kind kind = Kind::Constant;
  double factor = 2.0;
  double cap = 1e6;
  /// Piecewise only: alpha for iterations >= start_iteration, sorted by start.
  std::vector<AlphaPhase> phases;

  static AlphaRule constant() { return {}; }
  static AlphaRule multiply_on_infeasible(double factor, double cap);
  static AlphaRule piecewise(std::vector<AlphaPhase> phases);
};

struct LoopConfig {
  AcquisitionSpec acquisition;
  int n_initial = 4;
  /// Evaluations after the initial design.
  int budget = 60;
  std::uint64_t seed = 0;
  MaximizerConfig maximizer;
  AlphaRule alpha_rule;
  /// The seed field is replaced per iteration with one derived from `seed`.
  HyperparameterSearch gp;

  void validate(int num_constraints) const;
  /// Alpha in effect at iteration 0.
  Eigen::VectorXd initial_alpha() const;
};

enum class RecordPhase { Initial, Resample, Acquisition };

std::string to_string(RecordPhase phase);
std::optional<RecordPhase> parse_record_phase(std::string_view name);

struct TraceRecord {
  int evaluation = 0;
  /// Report axis: 0 for the initial design, k + 1 for the k-th later evaluation.
  int iteration = 0;
  RecordPhase phase = RecordPhase::Initial;
  Point x;
  double f_value = 0.0;
  Eigen::VectorXd c_values;
  bool feasible = false;
  std::optional<double> best_feasible_f;
  /// UCBO only.
  std::optional<double> beta;
  Eigen::VectorXd alpha;
};

struct RunTrace {
  Algorithm algorithm = Algorithm::Emi1;
  std::uint64_t seed = 0;
  int n_initial = 0;
  int budget = 0;
  std::vector<TraceRecord> records;
  Dataset dataset{1, 0};
};

/// Best feasible objective after the initial block (entry 0) and after each
/// later evaluation (entries 1..budget).
std::vector<std::optional<double>> best_feasible_series(const std::vector<TraceRecord>& records,
                                                        int n_initial);
std::optional<int> first_feasible_evaluation(const std::vector<TraceRecord>& records);

/// One point per equal-width stratum in every dimension.
std::vector<Point> latin_hypercube(const BoundedDomain& domain, int count, std::uint64_t seed);

/// Scores the rows of a matrix of points.
using BatchScore = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Seeded uniform multistart followed by coordinate pattern search with step
/// halving. The result is never bitwise-equal to a point already in `dataset`.
Point maximize_acquisition(const BatchScore& score, const BoundedDomain& domain,
                           const MaximizerConfig& config, const Dataset& dataset,
                           std::uint64_t seed);

/// Alpha for `next_iteration` given the rule and the latest evaluated sample.
Eigen::VectorXd update_alpha(const Eigen::VectorXd& current, const AlphaRule& rule,
                             int next_iteration, const Sample& latest);

struct SurrogateSet {
  Surrogate objective;
  std::vector<Surrogate> constraints;
};

SurrogateSet train_surrogates(const Problem& problem, const Dataset& dataset,
                              const HyperparameterSearch& search);

/// Batch acquisition over the trained surrogates with incumbents taken from
/// `dataset`. ECI (and UECI with beta < 1) needs a feasible sample.
BatchScore make_acquisition(const SurrogateSet& surrogates, const Dataset& dataset,
                            const AcquisitionSpec& spec);

/// Next sample chosen at loop iteration `iteration` (0-based, after the initial
/// design). A pure function of its arguments.
Point propose_next(const Problem& problem, const Dataset& dataset, const AcquisitionSpec& spec,
                   const LoopConfig& config, int iteration);

/// Merit-constrained BO with EMI form 1 or 2.
RunTrace run_mcbo(const Problem& problem, const LoopConfig& config);

/// UECI with beta = 1 until N_f feasible samples exist, then beta = 0.
RunTrace run_ucbo(const Problem& problem, const LoopConfig& config);

/// ECI with Latin-hypercube resampling until the first feasible sample.
RunTrace run_eci_baseline(const Problem& problem, const LoopConfig& config);

RunTrace run_algorithm(Algorithm algorithm, const Problem& problem, const LoopConfig& config);

}  // namespace cbo
