#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "cbo/errors.hpp"
#include "cbo/harness.hpp"

namespace cbo {
namespace {

namespace fs = std::filesystem;

TEST(Percentile, HandValues) {
  const std::vector<double> s = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(percentile(s, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile(s, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(percentile(s, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(percentile(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(s, 1.0), 4.0);
  const std::vector<double> one = {7.0};
  EXPECT_EQ(percentile(one, 0.25), 7.0);
  EXPECT_EQ(percentile(one, 0.75), 7.0);
  const std::vector<double> odd = {1.0, 5.0, 9.0};
  EXPECT_EQ(percentile(odd, 0.5), 5.0);
}

Replication constant_run(std::uint64_t seed, std::vector<std::optional<double>> series) {
  Replication r;
  r.seed = seed;
  r.best_feasible = std::move(series);
  return r;
}

TEST(Aggregate, SingleRunCollapsesQuartiles) {
  AlgorithmResult res;
  res.runs.push_back(constant_run(0, {std::nullopt, 3.0, 2.0}));
  aggregate(res);
  ASSERT_EQ(res.median.size(), 3u);
  EXPECT_FALSE(res.median[0].has_value());
  EXPECT_EQ(res.n_feasible_runs[0], 0);
  for (std::size_t t = 1; t < 3; ++t) {
    EXPECT_EQ(res.median[t], res.p25[t]);
    EXPECT_EQ(res.median[t], res.p75[t]);
    EXPECT_EQ(res.n_feasible_runs[t], 1);
  }
  EXPECT_EQ(*res.median[2], 2.0);
}

TEST(Aggregate, TwoRunsMedianIsMean) {
  AlgorithmResult res;
  res.runs.push_back(constant_run(0, {1.0, 1.0}));
  res.runs.push_back(constant_run(1, {3.0, 3.0}));
  aggregate(res);
  EXPECT_EQ(*res.median[1], 2.0);
  EXPECT_EQ(*res.p25[1], 1.5);
  EXPECT_EQ(*res.p75[1], 2.5);
}

TEST(Aggregate, OnlyFeasibleRunsContribute) {
  AlgorithmResult res;
  res.runs.push_back(constant_run(0, {std::nullopt, 4.0}));
  res.runs.push_back(constant_run(1, {2.0, 2.0}));
  Replication failed = constant_run(2, {});
  failed.ok = false;
  failed.error = "boom";
  res.runs.push_back(failed);
  aggregate(res);
  EXPECT_EQ(res.failures, 1);
  EXPECT_EQ(*res.median[0], 2.0);
  EXPECT_EQ(res.n_feasible_runs[0], 1);
  EXPECT_EQ(*res.median[1], 3.0);
  EXPECT_EQ(res.n_feasible_runs[1], 2);
}

LoopConfig small_config(Algorithm a, const std::string& bench, int budget) {
  LoopConfig c = make_benchmark(bench).presets.at(a);
  c.budget = budget;
  c.maximizer.candidate_count = 512;
  c.gp.restarts = 2;
  return c;
}

TEST(Replications, FailuresAreRecordedNotDropped) {
  const Problem good = ex1().problem;
  Problem bad = good;
  bad.objective = [](const Point& x) {
    if (x[0] > 3.0) throw std::runtime_error("objective exploded");
    return x.sum();
  };
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};
  const auto runs = run_replications(bad, Algorithm::Emi2, small_config(Algorithm::Emi2, "ex1", 3), seeds, 1);
  ASSERT_EQ(runs.size(), seeds.size());
  int failed = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].seed, seeds[i]);
    if (!runs[i].ok) {
      ++failed;
      EXPECT_NE(runs[i].error.find("objective exploded"), std::string::npos);
    }
  }
  EXPECT_GT(failed, 0);
}

TEST(Replications, JobsDoNotChangeResults) {
  const Problem p = ex1().problem;
  const std::vector<std::uint64_t> seeds = {10, 11, 12, 13};
  const LoopConfig c = small_config(Algorithm::Ucbo, "ex1", 4);
  const auto serial = run_replications(p, Algorithm::Ucbo, c, seeds, 1);
  const auto parallel = run_replications(p, Algorithm::Ucbo, c, seeds, 3);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].best_feasible, parallel[i].best_feasible);
    ASSERT_EQ(serial[i].records.size(), parallel[i].records.size());
    for (std::size_t k = 0; k < serial[i].records.size(); ++k) {
      EXPECT_EQ(serial[i].records[k].x, parallel[i].records[k].x);
    }
  }
}

ExperimentSpec tiny_spec(const std::string& dir) {
  ExperimentSpec spec = preset_spec("ex1", {Algorithm::Emi2, Algorithm::Eci}, 3, 100);
  for (auto& [a, c] : spec.configs) {
    c.budget = 3;
    c.maximizer.candidate_count = 256;
    c.gp.restarts = 2;
  }
  spec.output_dir = dir;
  spec.format = OutputFormat::Both;
  return spec;
}

TEST(Experiment, SeriesShapeAndSeeds) {
  const AggregateResult r = run_experiment(tiny_spec("unused"));
  ASSERT_EQ(r.algorithms.size(), 2u);
  for (const auto& a : r.algorithms) {
    EXPECT_EQ(a.median.size(), 4u);
    ASSERT_EQ(a.runs.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.runs[i].seed, 100 + i);
  }
}

TEST(Spec, Validation) {
  ExperimentSpec spec = preset_spec("ex1", {Algorithm::Emi1}, 5, 0);
  EXPECT_NO_THROW(spec.validate());
  spec.replications = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.replications = 5;
  spec.jobs = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.jobs = 1;
  spec.algorithms.push_back(Algorithm::Eci);
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Csv, FormatAndParseRoundTrip) {
  const AggregateResult r = run_experiment(tiny_spec("unused"));
  const std::string text = format_csv(r);
  EXPECT_EQ(text.substr(0, kCsvHeader.size()), kCsvHeader);
  const auto rows = parse_csv(text);
  ASSERT_EQ(rows.size(), 8u);
  std::size_t k = 0;
  for (const auto& a : r.algorithms) {
    for (std::size_t t = 0; t < a.median.size(); ++t, ++k) {
      EXPECT_EQ(rows[k].algorithm, to_string(a.algorithm));
      EXPECT_EQ(rows[k].iteration, static_cast<int>(t));
      EXPECT_EQ(rows[k].median, a.median[t]);
      EXPECT_EQ(rows[k].p25, a.p25[t]);
      EXPECT_EQ(rows[k].p75, a.p75[t]);
      EXPECT_EQ(rows[k].n_feasible_runs, a.n_feasible_runs[t]);
    }
  }
}

TEST(Csv, NaAndMalformedInput) {
  const std::string text = std::string(kCsvHeader) + "\nemi1,0,NA,NA,NA,0\nemi1,1,0.5,0.25,0.75,3\n";
  const auto rows = parse_csv(text);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].median.has_value());
  EXPECT_EQ(rows[1].p25, 0.25);
  EXPECT_EQ(format_number(std::nullopt), "NA");
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_THROW(parse_csv("a,b\n"), Error);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\nemi1,0,1\n"), Error);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\nemi1,x,1,1,1,1\n"), Error);
}

TEST(Json, ReloadGivesBitExactAggregates) {
  AggregateResult r = run_experiment(tiny_spec("unused"));
  r.algorithms[0].runs[1].ok = false;
  r.algorithms[0].runs[1].error = "synthetic failure";
  r.algorithms[0].runs[1].best_feasible.clear();
  aggregate(r.algorithms[0]);
  const AggregateResult back = parse_json(format_json(r));
  EXPECT_EQ(back.spec.benchmark, "ex1");
  EXPECT_EQ(back.spec.base_seed, 100u);
  ASSERT_EQ(back.algorithms.size(), r.algorithms.size());
  for (std::size_t i = 0; i < r.algorithms.size(); ++i) {
    const auto& a = r.algorithms[i];
    const auto& b = back.algorithms[i];
    EXPECT_EQ(a.algorithm, b.algorithm);
    EXPECT_EQ(a.failures, b.failures);
    EXPECT_EQ(a.config.budget, b.config.budget);
    EXPECT_EQ(a.config.acquisition.alpha, b.config.acquisition.alpha);
    ASSERT_EQ(a.runs.size(), b.runs.size());
    for (std::size_t k = 0; k < a.runs.size(); ++k) {
      EXPECT_EQ(a.runs[k].ok, b.runs[k].ok);
      EXPECT_EQ(a.runs[k].error, b.runs[k].error);
      EXPECT_EQ(a.runs[k].records.size(), b.runs[k].records.size());
    }
    AlgorithmResult recomputed = b;
    aggregate(recomputed);
    EXPECT_EQ(recomputed.median, a.median);
    EXPECT_EQ(recomputed.p25, a.p25);
    EXPECT_EQ(recomputed.p75, a.p75);
    EXPECT_EQ(recomputed.n_feasible_runs, a.n_feasible_runs);
    EXPECT_EQ(b.median, a.median);
  }
  EXPECT_EQ(format_csv(back), format_csv(r));
  EXPECT_EQ(format_json(back), format_json(r));
}

TEST(Json, NullForMissingValues) {
  const AggregateResult r = run_experiment(tiny_spec("unused"));
  const auto j = nlohmann::json::parse(format_json(r));
  EXPECT_EQ(j["format_version"], 1);
  bool saw_null = false;
  for (const auto& alg : j["results"]) {
    for (const auto& v : alg["aggregate"]["median"]) saw_null |= v.is_null();
  }
  // ex1 designs are mostly infeasible, so at least one early median is missing.
  EXPECT_TRUE(saw_null);
}

TEST(Output, WritesFilesAndSidecar) {
  const fs::path dir = fs::temp_directory_path() / "cbo_harness_output";
  fs::remove_all(dir);
  const AggregateResult r = run_experiment(tiny_spec(dir.string()));
  write_results(r, dir / "nested", OutputFormat::Both);
  EXPECT_EQ(read_file(dir / "nested" / "results.csv"), format_csv(r));
  EXPECT_EQ(read_file(dir / "nested" / "results.json"), format_json(r));
  const auto meta = nlohmann::json::parse(read_file(dir / "nested" / "metadata.json"));
  EXPECT_TRUE(meta.contains("written_unix_ms"));
  // The timestamp never leaks into the results themselves.
  EXPECT_EQ(read_file(dir / "nested" / "results.json").find("unix"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Output, UnwritableDirectoryNamesPath) {
  const AggregateResult r = run_experiment(tiny_spec("unused"));
  const fs::path file = fs::temp_directory_path() / "cbo_not_a_dir";
  { std::ofstream(file) << "x"; }
  try {
    write_results(r, file / "sub", OutputFormat::Csv);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("cbo_not_a_dir"), std::string::npos);
  }
  fs::remove(file);
}

TEST(Config, ParseSectionsAndComments) {
  const ConfigFile f = parse_config(
      "# leading comment\nbenchmark = ex2\nreplications=7 # trailing\n\n[emi1]\nalpha = 3, 0.5\n");
  EXPECT_EQ(f.global.at("benchmark"), "ex2");
  EXPECT_EQ(f.global.at("replications"), "7");
  EXPECT_EQ(f.sections.at("emi1").at("alpha"), "3, 0.5");
  EXPECT_THROW(parse_config("[emi1\n"), ConfigError);
  EXPECT_THROW(parse_config("novalue\n"), ConfigError);
}

TEST(Config, ApplySettings) {
  LoopConfig c = ex1().presets.at(Algorithm::Emi1);
  apply_setting(c, "budget", "12");
  apply_setting(c, "alpha", "4.5");
  apply_setting(c, "candidate_count", "100");
  apply_setting(c, "kernel", "squared_exponential");
  apply_setting(c, "alpha_rule", "multiply:3:50");
  EXPECT_EQ(c.budget, 12);
  EXPECT_EQ(c.acquisition.alpha[0], 4.5);
  EXPECT_EQ(c.maximizer.candidate_count, 100);
  EXPECT_EQ(c.gp.family, KernelFamily::SquaredExponential);
  EXPECT_EQ(c.alpha_rule.kind, AlphaRule::Kind::MultiplyOnInfeasible);
  EXPECT_EQ(c.alpha_rule.factor, 3.0);
  apply_setting(c, "alpha_schedule", "0:0; 10:0.01");
  EXPECT_EQ(c.alpha_rule.kind, AlphaRule::Kind::Piecewise);
  EXPECT_EQ(c.initial_alpha()[0], 0.0);
  EXPECT_THROW(apply_setting(c, "budget", "ten"), ConfigError);
  EXPECT_THROW(apply_setting(c, "budget", "10x"), ConfigError);
  EXPECT_THROW(apply_setting(c, "colour", "red"), ConfigError);
  EXPECT_THROW(apply_setting(c, "kernel", "linear"), ConfigError);
}

TEST(Config, MakeSpecOverlaysPresets) {
  const ExperimentSpec spec = make_spec(parse_config(
      "benchmark = ex2\nalgorithms = emi1,ucbo\nreplications = 5\nseed = 9\nbudget = 20\n"
      "format = json\n[ucbo]\nalpha = 1, 2\n"));
  EXPECT_EQ(spec.benchmark, "ex2");
  EXPECT_EQ(spec.algorithms, (std::vector<Algorithm>{Algorithm::Emi1, Algorithm::Ucbo}));
  EXPECT_EQ(spec.replications, 5);
  EXPECT_EQ(spec.base_seed, 9u);
  EXPECT_EQ(spec.format, OutputFormat::Json);
  EXPECT_EQ(spec.configs.at(Algorithm::Emi1).budget, 20);
  EXPECT_EQ(spec.configs.at(Algorithm::Ucbo).budget, 20);
  EXPECT_EQ(spec.configs.at(Algorithm::Emi1).acquisition.alpha, ex2().presets.at(Algorithm::Emi1).acquisition.alpha);
  EXPECT_EQ(spec.configs.at(Algorithm::Ucbo).acquisition.alpha, Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(spec.configs.at(Algorithm::Ucbo).acquisition.feasible_threshold, 1);
}

TEST(Config, MakeSpecErrors) {
  EXPECT_THROW(make_spec(parse_config("replications = 3\n")), ConfigError);
  EXPECT_THROW(make_spec(parse_config("benchmark = ex1\nalgorithms = emi9\n")), ConfigError);
  EXPECT_THROW(make_spec(parse_config("benchmark = ex1\n[bogus]\nbudget = 3\n")), ConfigError);
  EXPECT_THROW(make_spec(parse_config("benchmark = ex1\nalpha = 1, 2\n")), InvalidArgument);
  EXPECT_THROW(make_spec(parse_config("benchmark = ex1\nreplications = 0\n")), ConfigError);
}

TEST(Config, ShippedFilesLoad) {
  for (const char* name : {"ex1", "ex2", "ex4d"}) {
    const ExperimentSpec spec = make_spec(load_config(fs::path(CBO_CONFIG_DIR) / (std::string(name) + ".cfg")));
    EXPECT_EQ(spec.benchmark, name);
    EXPECT_EQ(spec.replications, 100);
    const BenchmarkDef def = make_benchmark(name);
    for (Algorithm a : spec.algorithms) {
      const LoopConfig& c = spec.configs.at(a);
      const LoopConfig& p = def.presets.at(a);
      EXPECT_EQ(c.budget, p.budget) << name << " " << to_string(a);
      EXPECT_EQ(c.acquisition.alpha, p.acquisition.alpha) << name << " " << to_string(a);
      EXPECT_EQ(c.acquisition.feasible_threshold, p.acquisition.feasible_threshold);
      EXPECT_EQ(c.alpha_rule.kind, p.alpha_rule.kind);
    }
  }
}

}  // namespace
}  // namespace cbo
