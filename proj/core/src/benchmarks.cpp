#include "cbo/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include <json.hpp>

#include "cbo/errors.hpp"
#include "cbo/random.hpp"

namespace cbo {

namespace hartmann4 {
const double kE[4] = {1.0, 1.2, 3.0, 3.2};
const double kA[4][4] = {
    {10.0, 0.05, 3.0, 17.0},
    {3.0, 10.0, 3.5, 8.0},
    {17.0, 17.0, 1.7, 0.05},
    {3.5, 0.1, 10.0, 10.0},
};
const double kP[4][4] = {
    {0.131, 0.232, 0.234, 0.404},
    {0.169, 0.413, 0.145, 0.882},
    {0.556, 0.83, 0.352, 0.873},
    {0.012, 0.373, 0.288, 0.574},
};
}  // namespace hartmann4

namespace {

// Frozen outputs of the oracles below (see run_oracle).
constexpr double kEx1Reference = 0.25;
constexpr double kEx2Reference = 0.59979989994997496;
constexpr double kEx4dReference = 0.051676207514755754;

constexpr std::uint64_t kOracleSeed = 20240917;

Eigen::VectorXd constant_alpha(int m, double value) { return Eigen::VectorXd::Constant(m, value); }

LoopConfig preset(AcquisitionKind kind, Eigen::VectorXd alpha, int budget, int feasible_threshold = 1) {
  LoopConfig c;
  c.acquisition.kind = kind;
  c.acquisition.alpha = std::move(alpha);
  c.acquisition.feasible_threshold = feasible_threshold;
  c.n_initial = 4;
  c.budget = budget;
  return c;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

std::string to_string(Provenance provenance) {
  return provenance == Provenance::Published ? "PAPER" : "DERIVED";
}

BenchmarkDef ex1() {
  BenchmarkDef def{.name = "ex1", .problem = Problem{
      "ex1",
      BoundedDomain(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 6.0)),
      [](const Point& x) { return std::sin(x[0]) + x[1]; },
      {[](const Point& x) { return -std::sin(x[0]) * std::sin(x[1]) - 0.95; }},
  }};
  def.reference_optimum = kEx1Reference;
  def.provenance = Provenance::Published;
  def.reference_method = "published global minimum; cross-checked by 1e6 uniform samples";
  def.presets[Algorithm::Emi1] = preset(AcquisitionKind::EMI1, constant_alpha(1, 20.0), 60);
  def.presets[Algorithm::Emi2] = preset(AcquisitionKind::EMI2, constant_alpha(1, 5.0), 60);
  def.presets[Algorithm::Ucbo] = preset(AcquisitionKind::UECI, constant_alpha(1, 20.0), 60, 2);
  def.presets[Algorithm::Eci] = preset(AcquisitionKind::ECI, constant_alpha(1, 0.0), 100);
  return def;
}

BenchmarkDef ex2() {
  BenchmarkDef def{.name = "ex2", .problem = Problem{
      "ex2",
      BoundedDomain::unit(2),
      [](const Point& x) { return x[0] + x[1]; },
      {
          [](const Point& x) {
            return 0.5 * std::sin(2.0 * std::numbers::pi * (x[0] * x[0] - 2.0 * x[1])) + x[0] +
                   2.0 * x[1] - 1.5;
          },
          [](const Point& x) { return -x[0] * x[0] - x[1] * x[1] + 1.5; },
      },
  }};
  def.reference_optimum = kEx2Reference;
  def.provenance = Provenance::Derived;
  def.reference_method = "minimum over a 2000x2000 grid restricted to both constraints";
  def.presets[Algorithm::Emi1] = preset(AcquisitionKind::EMI1, vec({2.0, 0.02}), 60);
  def.presets[Algorithm::Emi2] = preset(AcquisitionKind::EMI2, vec({25.0, 25.0}), 80);
  def.presets[Algorithm::Ucbo] = preset(AcquisitionKind::UECI, vec({100.0, 0.1}), 60, 1);
  def.presets[Algorithm::Eci] = preset(AcquisitionKind::ECI, constant_alpha(2, 0.0), 60);
  return def;
}

BenchmarkDef ex4d() {
  BenchmarkDef def{.name = "ex4d", .problem = Problem{
      "ex4d",
      BoundedDomain::unit(4),
      [](const Point& x) { return x.sum(); },
      {[](const Point& x) {
        using namespace hartmann4;
        double total = 0.0;
        for (int term = 0; term < 4; ++term) {
          double exponent = 0.0;
          for (int d = 0; d < 4; ++d) {
            const double diff = x[d] - kP[d][term];
            exponent += kA[d][term] * diff * diff;
          }
          total += kE[term] * std::exp(-exponent);
        }
        return (total - 1.1) / 0.8387;
      }},
  }};
  def.reference_optimum = kEx4dReference;
  def.provenance = Provenance::Derived;
  def.reference_method =
      "minimum over 1e7 uniform feasible samples, refined by feasible pattern search from the best 100";
  LoopConfig emi1 = preset(AcquisitionKind::EMI1, constant_alpha(1, 0.0), 50);
  emi1.alpha_rule = AlphaRule::piecewise({{0, constant_alpha(1, 0.0)}, {10, constant_alpha(1, 0.01)}});
  def.presets[Algorithm::Emi1] = emi1;
  def.presets[Algorithm::Emi2] = preset(AcquisitionKind::EMI2, constant_alpha(1, 0.01), 50);
  def.presets[Algorithm::Ucbo] = preset(AcquisitionKind::UECI, constant_alpha(1, 0.01), 50, 2);
  def.presets[Algorithm::Eci] = preset(AcquisitionKind::ECI, constant_alpha(1, 0.0), 50);
  return def;
}

std::vector<std::string> benchmark_names() { return {"ex1", "ex2", "ex4d"}; }

BenchmarkDef make_benchmark(const std::string& name) {
  if (name == "ex1") return ex1();
  if (name == "ex2") return ex2();
  if (name == "ex4d") return ex4d();
  throw InvalidArgument("unknown benchmark: " + name);
}

namespace {

bool feasible_at(const Problem& problem, const Point& x) {
  for (const ScalarFunction& c : problem.constraints) {
    if (!(c(x) >= 0.0)) return false;
  }
  return true;
}

struct Scored {
  double f;
  Point x;
  bool operator<(const Scored& other) const { return f < other.f; }
};

}  // namespace

OracleResult sampling_oracle(const Problem& problem, long long samples, std::uint64_t seed) {
  return sampling_refined_oracle(problem, samples, 0, seed);
}

OracleResult grid_oracle(const Problem& problem, int resolution) {
  if (problem.dim() != 2 || resolution < 2) {
    throw InvalidArgument("grid_oracle needs a 2-D problem and resolution >= 2");
  }
  const BoundedDomain& dom = problem.domain;
  OracleResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.method = "grid " + std::to_string(resolution) + "x" + std::to_string(resolution);
  Point x(2);
  for (int i = 0; i < resolution; ++i) {
    x[0] = dom.lower()[0] + dom.width()[0] * i / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      x[1] = dom.lower()[1] + dom.width()[1] * j / (resolution - 1);
      ++best.evaluated;
      if (!feasible_at(problem, x)) continue;
      ++best.feasible_count;
      const double f = problem.objective(x);
      if (f < best.value) {
        best.value = f;
        best.x = x;
      }
    }
  }
  if (best.feasible_count == 0) throw Error("grid oracle found no feasible point");
  return best;
}

OracleResult refine_feasible(const Problem& problem, const Point& start, double initial_step,
                             double min_step) {
  const BoundedDomain& dom = problem.domain;
  Point x = start;
  double fx = problem.objective(x);
  const Eigen::VectorXd width = dom.width();
  for (double step = initial_step; step >= min_step;) {
    bool moved = false;
    for (int d = 0; d < dom.dim() && !moved; ++d) {
      for (const double sign : {-1.0, 1.0}) {
        Point trial = x;
        trial[d] += sign * step * width[d];
        trial = dom.clip(trial);
        if (trial[d] == x[d] || !feasible_at(problem, trial)) continue;
        const double ft = problem.objective(trial);
        if (ft < fx) {
          x = trial;
          fx = ft;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  OracleResult r;
  r.value = fx;
  r.x = x;
  r.method = "feasible pattern search";
  return r;
}

OracleResult sampling_refined_oracle(const Problem& problem, long long samples, int refine_from,
                                     std::uint64_t seed) {
  const BoundedDomain& dom = problem.domain;
  const int n = dom.dim();
  Rng rng(seed);
  std::priority_queue<Scored> keep;  // max-heap of the best `keep_count` feasible points
  const std::size_t keep_count = static_cast<std::size_t>(std::max(refine_from, 1));

  OracleResult best;
  best.value = std::numeric_limits<double>::infinity();
  Point x(n);
  for (long long s = 0; s < samples; ++s) {
    for (int d = 0; d < n; ++d) x[d] = dom.lower()[d] + dom.width()[d] * uniform01(rng);
    ++best.evaluated;
    if (!feasible_at(problem, x)) continue;
    ++best.feasible_count;
    const double f = problem.objective(x);
    if (keep.size() < keep_count) {
      keep.push({f, x});
    } else if (f < keep.top().f) {
      keep.pop();
      keep.push({f, x});
    }
    if (f < best.value) {
      best.value = f;
      best.x = x;
    }
  }
  if (best.feasible_count == 0) throw Error("sampling oracle found no feasible point");

  best.method = std::to_string(samples) + " uniform samples";
  if (refine_from > 0) {
    best.method += ", feasible pattern search from the best " + std::to_string(refine_from);
    while (!keep.empty()) {
      const OracleResult r = refine_feasible(problem, keep.top().x, 0.05, 1e-10);
      keep.pop();
      if (r.value < best.value) {
        best.value = r.value;
        best.x = r.x;
      }
    }
  }
  return best;
}

OracleResult run_oracle(const std::string& benchmark) {
  const BenchmarkDef def = make_benchmark(benchmark);
  if (benchmark == "ex1") return sampling_oracle(def.problem, 1'000'000, kOracleSeed);
  if (benchmark == "ex2") return grid_oracle(def.problem, 2000);
  return sampling_refined_oracle(def.problem, 10'000'000, 100, kOracleSeed);
}

std::string describe_json(const BenchmarkDef& def) {
  nlohmann::ordered_json j;
  j["name"] = def.name;
  j["dimension"] = def.problem.dim();
  j["lower"] = std::vector<double>(def.problem.domain.lower().data(),
                                   def.problem.domain.lower().data() + def.problem.dim());
  j["upper"] = std::vector<double>(def.problem.domain.upper().data(),
                                   def.problem.domain.upper().data() + def.problem.dim());
  j["constraints"] = def.problem.num_constraints();
  j["reference_optimum"] = def.reference_optimum;
  j["provenance"] = to_string(def.provenance);
  j["reference_method"] = def.reference_method;
  nlohmann::ordered_json presets = nlohmann::ordered_json::object();
  for (const auto& [algorithm, config] : def.presets) {
    const Eigen::VectorXd alpha = config.initial_alpha();
    presets[to_string(algorithm)] = {
        {"budget", config.budget},
        {"n_initial", config.n_initial},
        {"alpha", std::vector<double>(alpha.data(), alpha.data() + alpha.size())},
        {"feasible_threshold", config.acquisition.feasible_threshold},
    };
  }
  j["presets"] = presets;
  return j.dump(2);
}

}  // namespace cbo
