#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cbo/optimizer.hpp"
#include "cbo/problem.hpp"

namespace cbo {

/// Where a reference optimum comes from.
enum class Provenance { Published, Derived };

std::string to_string(Provenance provenance);

struct BenchmarkDef {
  std::string name;
  Problem problem;
  double reference_optimum = 0.0;
  Provenance provenance = Provenance::Derived;
  /// How the reference optimum was obtained.
  std::string reference_method{};
  std::map<Algorithm, LoopConfig> presets{};
};

/// sin(x1) + x2 s.t. -sin(x1) sin(x2) - 0.95 >= 0 on [0,6]^2.
BenchmarkDef ex1();
/// x1 + x2 with a wavy lower constraint and a disc constraint on [0,1]^2.
BenchmarkDef ex2();
/// sum x_i s.t. a Hartmann-style bump constraint on [0,1]^4.
BenchmarkDef ex4d();

std::vector<std::string> benchmark_names();
/// Throws InvalidArgument for an unknown name.
BenchmarkDef make_benchmark(const std::string& name);

/// Hartmann-4 constants; term i uses column i of A and P.
namespace hartmann4 {
extern const double kE[4];
extern const double kA[4][4];  ///< kA[dimension][term]
extern const double kP[4][4];  ///< kP[dimension][term]
}  // namespace hartmann4

struct OracleResult {
  double value = 0.0;
  Point x;
  Provenance provenance = Provenance::Derived;
  std::string method;
  long long feasible_count = 0;
  long long evaluated = 0;
};

/// Minimum over `samples` uniform points that satisfy every constraint.
OracleResult sampling_oracle(const Problem& problem, long long samples, std::uint64_t seed);

/// Minimum over a resolution x resolution grid (endpoints included), 2-D only.
OracleResult grid_oracle(const Problem& problem, int resolution);

/// Coordinate pattern search on the objective that only accepts feasible moves.
OracleResult refine_feasible(const Problem& problem, const Point& start, double initial_step,
                             double min_step);

/// Sampling followed by feasible pattern search from the best `refine_from` points.
OracleResult sampling_refined_oracle(const Problem& problem, long long samples, int refine_from,
                                     std::uint64_t seed);

/// Re-derives a benchmark's reference optimum with its stated oracle.
OracleResult run_oracle(const std::string& benchmark);

/// Machine-readable description: name, dimension, bounds, constraint count,
/// reference optimum and provenance.
std::string describe_json(const BenchmarkDef& def);

}  // namespace cbo
