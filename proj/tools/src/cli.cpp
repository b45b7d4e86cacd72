#include "cbo/cli.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbo/benchmarks.hpp"
#include "cbo/errors.hpp"
#include "cbo/harness.hpp"

namespace cbo {

namespace {

struct RunOptions {
  std::string config;
  std::string benchmark;
  std::string algorithms;
  std::optional<int> replications;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::string alpha;
  std::optional<int> beta_threshold;
  std::string out;
  std::string format;
  std::optional<int> jobs;
};

struct ReplayOptions {
  std::string benchmark;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::optional<int> budget;
};

/// Thrown for bad flag values found after CLI11 has accepted the command line.
struct UsageError : Error {
  using Error::Error;
};

std::vector<Algorithm> parse_algorithm_list(const std::string& text) {
  std::vector<Algorithm> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string name = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) {
      const auto a = parse_algorithm(name);
      if (!a) throw UsageError("unknown algorithm '" + name + "'");
      out.push_back(*a);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw UsageError("no algorithms given");
  return out;
}

void require_benchmark(const std::string& name) {
  for (const std::string& b : benchmark_names()) {
    if (b == name) return;
  }
  throw UsageError("unknown benchmark '" + name + "'");
}

std::string fmt(double v) { return format_number(v); }

std::string fmt_vector(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt(v[i]);
  }
  return s + ")";
}

ExperimentSpec build_spec(const RunOptions& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) {
    spec = make_spec(load_config(o.config));
    if (!o.benchmark.empty() && o.benchmark != spec.benchmark) {
      require_benchmark(o.benchmark);
      ExperimentSpec presets = preset_spec(o.benchmark, spec.algorithms, spec.replications, spec.base_seed);
      presets.output_dir = spec.output_dir;
      presets.format = spec.format;
      presets.jobs = spec.jobs;
      spec = std::move(presets);
    }
  } else {
    if (o.benchmark.empty()) throw UsageError("run needs --benchmark or --config");
    require_benchmark(o.benchmark);
    spec = preset_spec(o.benchmark, all_algorithms(), 100, 0);
  }

  if (!o.algorithms.empty()) {
    const std::vector<Algorithm> algorithms = parse_algorithm_list(o.algorithms);
    const ExperimentSpec presets = preset_spec(spec.benchmark, algorithms, spec.replications, spec.base_seed);
    std::map<Algorithm, LoopConfig> configs;
    for (Algorithm a : algorithms) {
      const auto it = spec.configs.find(a);
      configs[a] = it != spec.configs.end() ? it->second : presets.configs.at(a);
    }
    spec.algorithms = algorithms;
    spec.configs = std::move(configs);
  }
  if (o.replications) spec.replications = *o.replications;
  if (o.seed) spec.base_seed = *o.seed;
  if (o.jobs) spec.jobs = *o.jobs;
  if (!o.out.empty()) spec.output_dir = o.out;
  if (!o.format.empty()) {
    const auto f = parse_output_format(o.format);
    if (!f) throw UsageError("unknown format '" + o.format + "'");
    spec.format = *f;
  }
  for (auto& [algorithm, config] : spec.configs) {
    if (o.budget) apply_setting(config, "budget", std::to_string(*o.budget));
    if (!o.alpha.empty()) apply_setting(config, "alpha", o.alpha);
    if (o.beta_threshold && algorithm == Algorithm::Ucbo) {
      apply_setting(config, "feasible_threshold", std::to_string(*o.beta_threshold));
    }
  }
  spec.validate();
  return spec;
}

int cmd_run(const RunOptions& o, std::ostream& out) {
  const ExperimentSpec spec = build_spec(o);
  const AggregateResult result = run_experiment(spec);
  write_results(result, spec.output_dir, spec.format);
  for (const AlgorithmResult& ar : result.algorithms) {
    out << to_string(ar.algorithm) << ": final median " << format_number(ar.median.back())
        << " over " << ar.n_feasible_runs.back() << " feasible runs";
    if (ar.failures > 0) out << ", " << ar.failures << " failed";
    out << '\n';
  }
  out << "wrote " << spec.output_dir << '\n';
  return 0;
}

int cmd_oracle(const std::string& benchmark, std::ostream& out) {
  require_benchmark(benchmark);
  const BenchmarkDef def = make_benchmark(benchmark);
  const OracleResult r = run_oracle(benchmark);
  out << "benchmark: " << benchmark << '\n'
      << "oracle value: " << fmt(r.value) << '\n'
      << "at: " << fmt_vector(r.x) << '\n'
      << "method: " << r.method << '\n'
      << "feasible samples: " << r.feasible_count << " of " << r.evaluated << '\n'
      << "reference optimum: " << fmt(def.reference_optimum) << " [" << to_string(def.provenance)
      << "]\n"
      << "reference method: " << def.reference_method << '\n';
  return 0;
}

int cmd_replay(const ReplayOptions& o, std::ostream& out) {
  require_benchmark(o.benchmark);
  const auto algorithm = parse_algorithm(o.algorithm);
  if (!algorithm) throw UsageError("unknown algorithm '" + o.algorithm + "'");
  const BenchmarkDef def = make_benchmark(o.benchmark);
  LoopConfig config = def.presets.at(*algorithm);
  if (o.budget) apply_setting(config, "budget", std::to_string(*o.budget));
  config.seed = o.seed;
  const RunTrace trace = run_algorithm(*algorithm, def.problem, config);

  out << "# " << o.benchmark << ' ' << to_string(*algorithm) << " seed " << o.seed << '\n';
  out << "evaluation\titeration\tphase\tx\tf\tc\tfeasible\tbest_feasible\tbeta\talpha\n";
  for (const TraceRecord& r : trace.records) {
    out << r.evaluation << '\t' << r.iteration << '\t' << to_string(r.phase) << '\t' << fmt_vector(r.x)
        << '\t' << fmt(r.f_value) << '\t' << fmt_vector(r.c_values) << '\t' << (r.feasible ? 1 : 0)
        << '\t' << format_number(r.best_feasible_f) << '\t' << format_number(r.beta) << '\t'
        << fmt_vector(r.alpha) << '\n';
  }
  return 0;
}

int cmd_list(std::ostream& out) {
  out << "benchmarks:";
  for (const std::string& b : benchmark_names()) out << ' ' << b;
  out << "\nalgorithms:";
  for (Algorithm a : all_algorithms()) out << ' ' << to_string(a);
  out << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained Bayesian optimization benchmarks"};
  app.name("cbo");
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run replicated experiments and write results");
  run_cmd->add_option("--config", run.config, "Experiment config file");
  run_cmd->add_option("--benchmark", run.benchmark, "Benchmark name");
  run_cmd->add_option("--algorithms", run.algorithms, "Comma-separated algorithms");
  run_cmd->add_option("--replications", run.replications, "Replications per algorithm")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Base seed; replication r uses seed + r");
  run_cmd->add_option("--budget", run.budget, "Evaluations after the initial design")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--alpha", run.alpha, "Penalty weights, comma-separated");
  run_cmd->add_option("--beta-threshold", run.beta_threshold, "Feasible samples before UCBO switches")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--format", run.format, "csv, json or both");
  run_cmd->add_option("--jobs", run.jobs, "Parallel replications")->check(CLI::PositiveNumber);

  std::string oracle_benchmark;
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Recompute a benchmark's reference optimum");
  oracle_cmd->add_option("--benchmark", oracle_benchmark, "Benchmark name")->required();

  ReplayOptions replay;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Re-run one seed and print its trace");
  replay_cmd->add_option("--benchmark", replay.benchmark, "Benchmark name")->required();
  replay_cmd->add_option("--algorithm", replay.algorithm, "Algorithm name")->required();
  replay_cmd->add_option("--seed", replay.seed, "Run seed")->required();
  replay_cmd->add_option("--budget", replay.budget, "Evaluations after the initial design")
      ->check(CLI::PositiveNumber);

  CLI::App* list_cmd = app.add_subcommand("list", "List benchmarks and algorithms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run, out);
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_benchmark, out);
    if (replay_cmd->parsed()) return cmd_replay(replay, out);
    if (list_cmd->parsed()) return cmd_list(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace cbo
