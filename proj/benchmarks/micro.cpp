#include <benchmark/benchmark.h>

#include <random>

#include "cbo/benchmarks.hpp"
#include "cbo/gp.hpp"
#include "cbo/optimizer.hpp"

namespace {

struct Data {
  Eigen::MatrixXd xs;
  Eigen::VectorXd ys;
};

Data ex4d_data(int n) {
  const cbo::Problem p = cbo::ex4d().problem;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d{Eigen::MatrixXd(n, 4), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) d.xs(i, j) = u(gen);
    d.ys[i] = p.constraints[0](d.xs.row(i).transpose());
  }
  return d;
}

void BM_Fit(benchmark::State& state) {
  const Data d = ex4d_data(static_cast<int>(state.range(0)));
  cbo::KernelConfig k;
  k.length_scales = Eigen::VectorXd::Constant(4, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(cbo::fit(k, d.xs, d.ys, 0.0));
}
BENCHMARK(BM_Fit)->Arg(10)->Arg(30)->Arg(60);

void BM_HyperparameterSearch(benchmark::State& state) {
  const Data d = ex4d_data(static_cast<int>(state.range(0)));
  const cbo::HyperparameterSearch search;
  for (auto _ : state) benchmark::DoNotOptimize(cbo::fit_hyperparameters(d.xs, d.ys, d.ys.mean(), search));
}
BENCHMARK(BM_HyperparameterSearch)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
  const Data d = ex4d_data(static_cast<int>(state.range(0)));
  cbo::KernelConfig k;
  k.length_scales = Eigen::VectorXd::Constant(4, 0.3);
  const cbo::SurrogateModel model = cbo::fit(k, d.xs, d.ys, 0.0);
  const Eigen::MatrixXd queries = (Eigen::MatrixXd::Random(1024, 4).array() + 1.0) / 2.0;
  Eigen::VectorXd mu, sigma;
  for (auto _ : state) {
    model.predict_batch(queries, mu, sigma);
    benchmark::DoNotOptimize(mu.data());
  }
  state.SetItemsProcessed(state.iterations() * queries.rows());
}
BENCHMARK(BM_PredictBatch)->Arg(10)->Arg(60);

void BM_ProposeNext(benchmark::State& state) {
  const cbo::BenchmarkDef def = cbo::ex4d();
  const Data d = ex4d_data(20);
  cbo::Dataset dataset(4, 1);
  for (Eigen::Index i = 0; i < d.xs.rows(); ++i) dataset.append(cbo::evaluate(def.problem, d.xs.row(i).transpose()));
  const cbo::LoopConfig config = def.presets.at(cbo::Algorithm::Emi2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::propose_next(def.problem, dataset, config.acquisition, config, 0));
  }
}
BENCHMARK(BM_ProposeNext)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
