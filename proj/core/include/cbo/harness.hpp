#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbo/benchmarks.hpp"
#include "cbo/optimizer.hpp"

namespace cbo {

enum class OutputFormat { Csv, Json, Both };

std::optional<OutputFormat> parse_output_format(std::string_view name);

struct ExperimentSpec {
  std::string benchmark;
  std::vector<Algorithm> algorithms;
  int replications = 100;
  std::uint64_t base_seed = 0;
  /// Fully resolved per-algorithm configuration; the seed field is ignored
  /// (replication r runs with base_seed + r).
  std::map<Algorithm, LoopConfig> configs;
  std::string output_dir = ".";
  OutputFormat format = OutputFormat::Csv;
  /// Worker threads for replications. Output does not depend on it.
  int jobs = 1;

  void validate() const;
};

/// Spec with every algorithm of a benchmark at its published presets.
ExperimentSpec preset_spec(const std::string& benchmark, std::vector<Algorithm> algorithms,
                           int replications, std::uint64_t base_seed);

struct Replication {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<TraceRecord> records;
  /// Entry t: best feasible objective after iteration t (0 = initial design).
  std::vector<std::optional<double>> best_feasible;
  std::optional<int> first_feasible_evaluation;
};

struct AlgorithmResult {
  Algorithm algorithm = Algorithm::Emi1;
  LoopConfig config;
  std::vector<Replication> runs;
  /// Over successful runs with a feasible value at each iteration.
  std::vector<std::optional<double>> median;
  std::vector<std::optional<double>> p25;
  std::vector<std::optional<double>> p75;
  std::vector<int> n_feasible_runs;
  int failures = 0;
};

struct AggregateResult {
  ExperimentSpec spec;
  std::vector<AlgorithmResult> algorithms;
};

/// Linear interpolation between closest ranks on sorted data:
/// h = (N - 1) q, value = s[floor h] + (h - floor h)(s[floor h + 1] - s[floor h]).
double percentile(std::span<const double> sorted, double q);

/// Recomputes the percentile series of `result` from its runs.
void aggregate(AlgorithmResult& result);

Replication to_replication(const RunTrace& trace);

/// Runs seeds base_seed .. base_seed + replications - 1 on `jobs` threads.
/// Failed runs are recorded with their diagnostic, never dropped.
std::vector<Replication> run_replications(const Problem& problem, Algorithm algorithm,
                                          const LoopConfig& config, std::span<const std::uint64_t> seeds,
                                          int jobs);

AggregateResult run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Config files: `key = value` lines, `#` comments, `[algorithm]` sections.

struct ConfigFile {
  std::map<std::string, std::string> global;
  std::map<std::string, std::map<std::string, std::string>> sections;
};

ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::filesystem::path& path);

/// Applies one per-algorithm setting (budget, alpha, alpha_schedule,
/// alpha_rule, feasible_threshold, xi, n_initial, candidate_count,
/// refine_steps, gp_restarts, kernel). Throws ConfigError on a bad key or value.
void apply_setting(LoopConfig& config, std::string_view key, std::string_view value);

/// Benchmark presets overlaid with the file's global and section settings.
ExperimentSpec make_spec(const ConfigFile& file);

// ---------------------------------------------------------------------------
// Reports.

struct CsvRow {
  std::string algorithm;
  int iteration = 0;
  std::optional<double> median;
  std::optional<double> p25;
  std::optional<double> p75;
  int n_feasible_runs = 0;
};

inline constexpr std::string_view kCsvHeader = "algorithm,iteration,median,p25,p75,n_feasible_runs";

/// Round-trip-safe decimal (17 significant digits) or NA.
std::string format_number(std::optional<double> value);

std::string format_csv(const AggregateResult& result);
std::vector<CsvRow> parse_csv(std::string_view text);

std::string format_json(const AggregateResult& result);
AggregateResult parse_json(std::string_view text);

/// Writes results.csv and/or results.json into `dir`, plus a metadata.json
/// sidecar holding the only timestamp. Throws IoError naming the path.
void write_results(const AggregateResult& result, const std::filesystem::path& dir,
                   OutputFormat format);

std::string read_file(const std::filesystem::path& path);

}  // namespace cbo
