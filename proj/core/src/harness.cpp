#include "cbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cbo/errors.hpp"

namespace cbo {

std::optional<OutputFormat> parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "both") return OutputFormat::Both;
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (algorithms.empty()) throw ConfigError("algorithm list is empty");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  const BenchmarkDef def = make_benchmark(benchmark);
  for (Algorithm a : algorithms) {
    const auto it = configs.find(a);
    if (it == configs.end()) throw ConfigError("no configuration for algorithm " + to_string(a));
    it->second.validate(def.problem.num_constraints());
  }
}

ExperimentSpec preset_spec(const std::string& benchmark, std::vector<Algorithm> algorithms,
                           int replications, std::uint64_t base_seed) {
  const BenchmarkDef def = make_benchmark(benchmark);
  ExperimentSpec spec;
  spec.benchmark = benchmark;
  spec.algorithms = std::move(algorithms);
  spec.replications = replications;
  spec.base_seed = base_seed;
  for (Algorithm a : spec.algorithms) spec.configs[a] = def.presets.at(a);
  return spec;
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("percentile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

void aggregate(AlgorithmResult& result) {
  std::size_t length = 0;
  result.failures = 0;
  for (const Replication& r : result.runs) {
    if (!r.ok) {
      ++result.failures;
      continue;
    }
    length = std::max(length, r.best_feasible.size());
  }
  result.median.assign(length, std::nullopt);
  result.p25.assign(length, std::nullopt);
  result.p75.assign(length, std::nullopt);
  result.n_feasible_runs.assign(length, 0);

  std::vector<double> values;
  for (std::size_t t = 0; t < length; ++t) {
    values.clear();
    for (const Replication& r : result.runs) {
      if (r.ok && t < r.best_feasible.size() && r.best_feasible[t]) values.push_back(*r.best_feasible[t]);
    }
    result.n_feasible_runs[t] = static_cast<int>(values.size());
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    result.median[t] = percentile(values, 0.5);
    result.p25[t] = percentile(values, 0.25);
    result.p75[t] = percentile(values, 0.75);
  }
}

Replication to_replication(const RunTrace& trace) {
  Replication r;
  r.seed = trace.seed;
  r.records = trace.records;
  r.best_feasible = best_feasible_series(trace.records, trace.n_initial);
  r.first_feasible_evaluation = first_feasible_evaluation(trace.records);
  return r;
}

std::vector<Replication> run_replications(const Problem& problem, Algorithm algorithm,
                                          const LoopConfig& config, std::span<const std::uint64_t> seeds,
                                          int jobs) {
  std::vector<Replication> out(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      LoopConfig c = config;
      c.seed = seeds[i];
      try {
        out[i] = to_replication(run_algorithm(algorithm, problem, c));
      } catch (const std::exception& e) {
        Replication failed;
        failed.seed = seeds[i];
        failed.ok = false;
        failed.error = e.what();
        out[i] = std::move(failed);
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return out;
}

AggregateResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const BenchmarkDef def = make_benchmark(spec.benchmark);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(spec.replications));
  for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = spec.base_seed + r;

  AggregateResult result;
  result.spec = spec;
  for (Algorithm a : spec.algorithms) {
    AlgorithmResult ar;
    ar.algorithm = a;
    ar.config = spec.configs.at(a);
    ar.runs = run_replications(def.problem, a, ar.config, seeds, spec.jobs);
    aggregate(ar);
    result.algorithms.push_back(std::move(ar));
  }
  return result;
}

}  // namespace cbo
