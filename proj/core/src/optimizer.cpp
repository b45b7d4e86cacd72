#include "cbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cbo/errors.hpp"
#include "cbo/random.hpp"

namespace cbo {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitialDesign = 0x1001;
constexpr std::uint64_t kResample = 0x1002;
constexpr std::uint64_t kHyperparameters = 0x1003;
constexpr std::uint64_t kMaximizer = 0x1004;

constexpr Eigen::Index kScoreChunk = 1024;

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Emi1: return "emi1";
    case Algorithm::Emi2: return "emi2";
    case Algorithm::Ucbo: return "ucbo";
    case Algorithm::Eci: return "eci";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::Emi1, Algorithm::Emi2, Algorithm::Ucbo, Algorithm::Eci};
}

AcquisitionKind acquisition_kind(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Emi1: return AcquisitionKind::EMI1;
    case Algorithm::Emi2: return AcquisitionKind::EMI2;
    case Algorithm::Ucbo: return AcquisitionKind::UECI;
    case Algorithm::Eci: return AcquisitionKind::ECI;
  }
  return AcquisitionKind::EI;
}

AlphaRule AlphaRule::multiply_on_infeasible(double factor, double cap) {
  AlphaRule rule;
  rule.kind = Kind::MultiplyOnInfeasible;
  rule.factor = factor;
  rule.cap = cap;
  return rule;
}

AlphaRule AlphaRule::piecewise(std::vector<AlphaPhase> phases) {
  std::sort(phases.begin(), phases.end(),
            [](const AlphaPhase& a, const AlphaPhase& b) { return a.start_iteration < b.start_iteration; });
  AlphaRule rule;
  rule.kind = Kind::Piecewise;
  rule.phases = std::move(phases);
  return rule;
}

void LoopConfig::validate(int num_constraints) const {
  acquisition.validate();
  if (n_initial < 1) throw InvalidArgument("n_initial must be >= 1");
  if (budget < 1) throw InvalidArgument("budget must be >= 1");
  if (maximizer.candidate_count < 1) throw InvalidArgument("candidate_count must be >= 1");
  if (maximizer.refine_steps < 0) throw InvalidArgument("refine_steps must be >= 0");
  if (acquisition.alpha.size() != num_constraints) {
    throw InvalidArgument("alpha length must equal the constraint count");
  }
  if (alpha_rule.kind == AlphaRule::Kind::Piecewise) {
    if (alpha_rule.phases.empty()) throw InvalidArgument("piecewise alpha rule needs phases");
    for (const AlphaPhase& phase : alpha_rule.phases) {
      if (phase.alpha.size() != num_constraints || (phase.alpha.array() < 0.0).any()) {
        throw InvalidArgument("piecewise alpha phase has the wrong length or a negative entry");
      }
    }
  }
  if (alpha_rule.kind == AlphaRule::Kind::MultiplyOnInfeasible &&
      !(alpha_rule.factor >= 1.0 && alpha_rule.cap >= 0.0)) {
    throw InvalidArgument("multiply rule needs factor >= 1 and cap >= 0");
  }
}

namespace {

const AlphaPhase* phase_for(const AlphaRule& rule, int iteration) {
  const AlphaPhase* found = nullptr;
  for (const AlphaPhase& phase : rule.phases) {
    if (phase.start_iteration <= iteration) found = &phase;
  }
  return found;
}

}  // namespace

Eigen::VectorXd LoopConfig::initial_alpha() const {
  if (alpha_rule.kind == AlphaRule::Kind::Piecewise) {
    if (const AlphaPhase* phase = phase_for(alpha_rule, 0)) return phase->alpha;
  }
  return acquisition.alpha;
}

std::string to_string(RecordPhase phase) {
  switch (phase) {
    case RecordPhase::Initial: return "initial";
    case RecordPhase::Resample: return "resample";
    case RecordPhase::Acquisition: return "acquisition";
  }
  return "?";
}

std::optional<RecordPhase> parse_record_phase(std::string_view name) {
  for (RecordPhase p : {RecordPhase::Initial, RecordPhase::Resample, RecordPhase::Acquisition}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::vector<std::optional<double>> best_feasible_series(const std::vector<TraceRecord>& records,
                                                        int n_initial) {
  std::vector<std::optional<double>> series;
  std::optional<double> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TraceRecord& r = records[i];
    if (r.feasible && (!best || r.f_value < *best)) best = r.f_value;
    if (static_cast<int>(i) + 1 >= n_initial) series.push_back(best);
  }
  return series;
}

std::optional<int> first_feasible_evaluation(const std::vector<TraceRecord>& records) {
  for (const TraceRecord& r : records) {
    if (r.feasible) return r.evaluation;
  }
  return std::nullopt;
}

std::vector<Point> latin_hypercube(const BoundedDomain& domain, int count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("latin_hypercube needs count >= 1");
  Rng rng(seed);
  const int n = domain.dim();
  std::vector<Point> points(static_cast<std::size_t>(count), Point(n));
  std::vector<int> strata(static_cast<std::size_t>(count));
  for (int d = 0; d < n; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    // Fisher-Yates with our own uniform draw so the permutation is library-independent.
    for (int i = count - 1; i > 0; --i) {
      const int j = std::min(i, static_cast<int>(uniform01(rng) * (i + 1)));
      std::swap(strata[static_cast<std::size_t>(i)], strata[static_cast<std::size_t>(j)]);
    }
    const double lo = domain.lower()[d];
    const double width = domain.upper()[d] - lo;
    for (int i = 0; i < count; ++i) {
      const double u = (strata[static_cast<std::size_t>(i)] + uniform01(rng)) / count;
      points[static_cast<std::size_t>(i)][d] = std::min(lo + width * u, domain.upper()[d]);
    }
  }
  return points;
}

namespace {

Eigen::VectorXd score_rows(const BatchScore& score, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index start = 0; start < points.rows(); start += kScoreChunk) {
    const Eigen::Index len = std::min(kScoreChunk, points.rows() - start);
    const Eigen::VectorXd part = score(points.middleRows(start, len));
    if (part.size() != len) throw InvalidArgument("acquisition returned the wrong number of scores");
    out.segment(start, len) = part;
  }
  // NaN never wins.
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) out[i] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

Eigen::Index first_argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

Point maximize_acquisition(const BatchScore& score, const BoundedDomain& domain,
                           const MaximizerConfig& config, const Dataset& dataset,
                           std::uint64_t seed) {
  if (config.candidate_count < 1) throw InvalidArgument("candidate_count must be >= 1");
  const int n = domain.dim();
  const Eigen::VectorXd width = domain.width();
  Rng rng(seed);

  Eigen::MatrixXd candidates(config.candidate_count, n);
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    for (int d = 0; d < n; ++d) candidates(i, d) = domain.lower()[d] + width[d] * uniform01(rng);
  }
  const Eigen::VectorXd scores = score_rows(score, candidates);
  const Eigen::Index top = first_argmax(scores);
  Point best = candidates.row(top).transpose();
  double best_score = scores[top];

  // Pattern search in unit coordinates.
  double step = 0.5 / std::pow(static_cast<double>(config.candidate_count), 1.0 / n);
  Eigen::MatrixXd trials(2 * n, n);
  for (int s = 0; s < config.refine_steps; ++s) {
    for (int d = 0; d < n; ++d) {
      Point up = best;
      Point down = best;
      up[d] += step * width[d];
      down[d] -= step * width[d];
      trials.row(2 * d) = domain.clip(up).transpose();
      trials.row(2 * d + 1) = domain.clip(down).transpose();
    }
    const Eigen::VectorXd trial_scores = score_rows(score, trials);
    const Eigen::Index t = first_argmax(trial_scores);
    if (trial_scores[t] > best_score) {
      best = trials.row(t).transpose();
      best_score = trial_scores[t];
    } else {
      step *= 0.5;
    }
  }

  for (int attempt = 0; dataset.contains(best) && attempt < 64; ++attempt) {
    for (int d = 0; d < n; ++d) {
      const double nudge = 1e-6 * width[d];
      best[d] = best[d] + nudge <= domain.upper()[d] ? best[d] + nudge : best[d] - nudge;
    }
    best = domain.clip(best);
  }
  return best;
}

Eigen::VectorXd update_alpha(const Eigen::VectorXd& current, const AlphaRule& rule,
                             int next_iteration, const Sample& latest) {
  switch (rule.kind) {
    case AlphaRule::Kind::Constant:
      return current;
    case AlphaRule::Kind::MultiplyOnInfeasible: {
      Eigen::VectorXd next = current;
      for (Eigen::Index j = 0; j < next.size(); ++j) {
        if (latest.c_values[j] < 0.0) next[j] = std::min(next[j] * rule.factor, rule.cap);
      }
      return next;
    }
    case AlphaRule::Kind::Piecewise:
      if (const AlphaPhase* phase = phase_for(rule, next_iteration)) return phase->alpha;
      return current;
  }
  return current;
}

SurrogateSet train_surrogates(const Problem& problem, const Dataset& dataset,
                              const HyperparameterSearch& search) {
  const Eigen::MatrixXd xs = dataset.inputs();
  HyperparameterSearch s = search;
  s.seed = derive_seed(search.seed, 0);
  SurrogateSet set{Surrogate::train(problem.domain, xs, dataset.objective_values(), s), {}};
  for (int j = 0; j < dataset.num_constraints(); ++j) {
    s.seed = derive_seed(search.seed, static_cast<std::uint64_t>(j) + 1);
    set.constraints.push_back(
        Surrogate::train(problem.domain, xs, dataset.constraint_values(j), s));
  }
  return set;
}

BatchScore make_acquisition(const SurrogateSet& surrogates, const Dataset& dataset,
                            const AcquisitionSpec& spec) {
  if (dataset.empty()) throw EmptyDatasetError("acquisition needs at least one sample");
  const std::optional<FeasibleIncumbent> feasible = best_feasible(dataset);

  double incumbent_f = 0.0;
  MeritIncumbent merit;
  switch (spec.kind) {
    case AcquisitionKind::EI: {
      const Eigen::VectorXd fs = dataset.objective_values();
      Eigen::Index idx = 0;
      incumbent_f = fs.minCoeff(&idx);
      break;
    }
    case AcquisitionKind::ECI:
      if (!feasible) throw InvalidArgument("ECI needs a feasible incumbent");
      incumbent_f = feasible->f_value;
      break;
    case AcquisitionKind::EMI1:
    case AcquisitionKind::EMI2:
      merit = best_merit(dataset, spec.alpha);
      break;
    case AcquisitionKind::UECI:
      merit = best_merit(dataset, spec.alpha);
      if (spec.beta < 1.0 && !feasible) {
        throw InvalidArgument("UECI with beta < 1 needs a feasible incumbent");
      }
      break;
  }
  std::optional<double> feasible_f;
  if (feasible) feasible_f = feasible->f_value;

  return [&surrogates, spec, incumbent_f, merit, feasible_f](const Eigen::MatrixXd& points) {
    const Eigen::Index rows = points.rows();
    const std::size_t m = surrogates.constraints.size();
    Eigen::VectorXd mu_f, sigma_f;
    surrogates.objective.predict_batch(points, mu_f, sigma_f);
    std::vector<Eigen::VectorXd> mu_c(m), sigma_c(m);
    for (std::size_t j = 0; j < m; ++j) surrogates.constraints[j].predict_batch(points, mu_c[j], sigma_c[j]);

    Eigen::VectorXd out(rows);
    PosteriorBundle post;
    post.constraints.resize(m);
    for (Eigen::Index i = 0; i < rows; ++i) {
      post.objective = Prediction{mu_f[i], sigma_f[i]};
      for (std::size_t j = 0; j < m; ++j) post.constraints[j] = Prediction{mu_c[j][i], sigma_c[j][i]};
      switch (spec.kind) {
        case AcquisitionKind::EI:
          out[i] = expected_improvement(post.objective, incumbent_f, spec.xi);
          break;
        case AcquisitionKind::ECI:
          out[i] = eci(post, incumbent_f, spec.xi);
          break;
        case AcquisitionKind::EMI1:
          out[i] = emi_form1(post, merit, spec.alpha, spec.xi);
          break;
        case AcquisitionKind::EMI2:
          out[i] = emi_form2(post, merit.merit, spec.alpha);
          break;
        case AcquisitionKind::UECI:
          out[i] = ueci(post, feasible_f, merit, spec.alpha, spec.beta, spec.xi);
          break;
      }
    }
    return out;
  };
}

Point propose_next(const Problem& problem, const Dataset& dataset, const AcquisitionSpec& spec,
                   const LoopConfig& config, int iteration) {
  HyperparameterSearch search = config.gp;
  search.seed = derive_seed(config.seed, kHyperparameters, static_cast<std::uint64_t>(iteration));
  const SurrogateSet surrogates = train_surrogates(problem, dataset, search);
  const BatchScore score = make_acquisition(surrogates, dataset, spec);
  return maximize_acquisition(score, problem.domain, config.maximizer, dataset,
                              derive_seed(config.seed, kMaximizer, static_cast<std::uint64_t>(iteration)));
}

namespace {

class RunRecorder {
 public:
  RunRecorder(Algorithm algorithm, const Problem& problem, const LoopConfig& config)
      : problem_(problem) {
    trace_.algorithm = algorithm;
    trace_.seed = config.seed;
    trace_.n_initial = config.n_initial;
    trace_.budget = config.budget;
    trace_.dataset = Dataset(problem.dim(), problem.num_constraints());
    trace_.records.reserve(static_cast<std::size_t>(config.n_initial + config.budget));
  }

  const Dataset& dataset() const { return trace_.dataset; }
  int evaluations() const { return static_cast<int>(trace_.records.size()); }

  const Sample& record(const Point& x, RecordPhase phase, int iteration,
                       std::optional<double> beta, const Eigen::VectorXd& alpha) {
    Sample s = evaluate(problem_, x);
    TraceRecord r;
    r.evaluation = evaluations();
    r.iteration = iteration;
    r.phase = phase;
    r.x = s.x;
    r.f_value = s.f_value;
    r.c_values = s.c_values;
    r.feasible = s.feasible;
    if (s.feasible && (!best_ || s.f_value < *best_)) best_ = s.f_value;
    r.best_feasible_f = best_;
    r.beta = beta;
    r.alpha = alpha;
    trace_.records.push_back(std::move(r));
    trace_.dataset.append(std::move(s));
    return trace_.dataset[trace_.dataset.size() - 1];
  }

  void initial_design(const LoopConfig& config, std::optional<double> beta,
                      const Eigen::VectorXd& alpha) {
    for (const Point& x : latin_hypercube(problem_.domain, config.n_initial,
                                          derive_seed(config.seed, kInitialDesign))) {
      record(x, RecordPhase::Initial, 0, beta, alpha);
    }
  }

  RunTrace finish() { return std::move(trace_); }

 private:
  const Problem& problem_;
  RunTrace trace_;
  std::optional<double> best_;
};

void require_kind(const LoopConfig& config, std::initializer_list<AcquisitionKind> allowed,
                  const char* loop) {
  if (std::find(allowed.begin(), allowed.end(), config.acquisition.kind) == allowed.end()) {
    throw InvalidArgument(std::string(loop) + ": unsupported acquisition " +
                          to_string(config.acquisition.kind));
  }
}

}  // namespace

RunTrace run_mcbo(const Problem& problem, const LoopConfig& config) {
  require_kind(config, {AcquisitionKind::EMI1, AcquisitionKind::EMI2}, "run_mcbo");
  config.validate(problem.num_constraints());
  const Algorithm algorithm =
      config.acquisition.kind == AcquisitionKind::EMI1 ? Algorithm::Emi1 : Algorithm::Emi2;

  RunRecorder run(algorithm, problem, config);
  Eigen::VectorXd alpha = config.initial_alpha();
  run.initial_design(config, std::nullopt, alpha);

  for (int k = 0; k < config.budget; ++k) {
    AcquisitionSpec spec = config.acquisition;
    spec.alpha = alpha;
    const Point x = propose_next(problem, run.dataset(), spec, config, k);
    const Sample& latest = run.record(x, RecordPhase::Acquisition, k + 1, std::nullopt, alpha);
    alpha = update_alpha(alpha, config.alpha_rule, k + 1, latest);
  }
  return run.finish();
}

RunTrace run_ucbo(const Problem& problem, const LoopConfig& config) {
  require_kind(config, {AcquisitionKind::UECI}, "run_ucbo");
  config.validate(problem.num_constraints());

  RunRecorder run(Algorithm::Ucbo, problem, config);
  Eigen::VectorXd alpha = config.initial_alpha();
  double beta = 1.0;
  run.initial_design(config, beta, alpha);

  for (int k = 0; k < config.budget; ++k) {
    if (run.dataset().feasible_count() >= config.acquisition.feasible_threshold) beta = 0.0;
    AcquisitionSpec spec = config.acquisition;
    spec.alpha = alpha;
    spec.beta = beta;
    const Point x = propose_next(problem, run.dataset(), spec, config, k);
    const Sample& latest = run.record(x, RecordPhase::Acquisition, k + 1, beta, alpha);
    alpha = update_alpha(alpha, config.alpha_rule, k + 1, latest);
  }
  return run.finish();
}

RunTrace run_eci_baseline(const Problem& problem, const LoopConfig& config) {
  require_kind(config, {AcquisitionKind::ECI}, "run_eci_baseline");
  config.validate(problem.num_constraints());

  RunRecorder run(Algorithm::Eci, problem, config);
  const Eigen::VectorXd alpha = config.initial_alpha();
  run.initial_design(config, std::nullopt, alpha);

  int k = 0;
  for (std::uint64_t batch = 0; k < config.budget && run.dataset().feasible_count() == 0; ++batch) {
    for (const Point& x : latin_hypercube(problem.domain, config.n_initial,
                                          derive_seed(config.seed, kResample, batch))) {
      if (k >= config.budget || run.dataset().feasible_count() > 0) break;
      if (run.dataset().contains(x)) continue;
      run.record(x, RecordPhase::Resample, k + 1, std::nullopt, alpha);
      ++k;
    }
  }
  for (; k < config.budget; ++k) {
    AcquisitionSpec spec = config.acquisition;
    spec.alpha = alpha;
    const Point x = propose_next(problem, run.dataset(), spec, config, k);
    run.record(x, RecordPhase::Acquisition, k + 1, std::nullopt, alpha);
  }
  return run.finish();
}

RunTrace run_algorithm(Algorithm algorithm, const Problem& problem, const LoopConfig& config) {
  LoopConfig c = config;
  c.acquisition.kind = acquisition_kind(algorithm);
  switch (algorithm) {
    case Algorithm::Emi1:
    case Algorithm::Emi2:
      return run_mcbo(problem, c);
    case Algorithm::Ucbo:
      return run_ucbo(problem, c);
    case Algorithm::Eci:
      return run_eci_baseline(problem, c);
  }
  throw InvalidArgument("unknown algorithm");
}

}  // namespace cbo
